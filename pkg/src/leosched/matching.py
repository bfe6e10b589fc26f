"""Serving-satellite identification by DTW trajectory matching."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from datetime import datetime
from typing import Mapping

import numpy as np

from . import kernels
from .obstruction.track import PolarTrack
from .orbital.frames import ObserverLocation
from .orbital.visibility import DEFAULT_MIN_ELEVATION, Constellation
from .timeutil import isoformat, to_unix

SLOT_SECONDS = 15.0
RIM_RADIUS = 65.0


class NoCandidates(LookupError):
    pass


@dataclass
class CartesianTrack:
    points: np.ndarray  # (n, 2)
    source: object = "observed"

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)
        if len(self.points) < 2:
            raise ValueError("a cartesian track needs at least 2 points")


@dataclass
class MatchConfig:
    sample_step_s: float = 1.0
    n_samples: int = 15
    min_elevation: float = DEFAULT_MIN_ELEVATION
    min_margin: float = 0.0


@dataclass
class MatchResult:
    slot_index: int
    best: int
    best_distance: float
    runner_up_distance: float
    margin: float
    candidates_considered: int
    orientation: str  # "forward" | "reversed"
    low_confidence: bool = False
    terminal_id: str = ""
    slot_start: datetime | None = None
    distances: dict = field(default_factory=dict, repr=False)


def polar_to_xy(elevation, azimuth) -> np.ndarray:
    """Polar-plane projection: r = 90 - elevation, x east, y north."""
    el = np.asarray(elevation, dtype=float)
    az = np.radians(np.asarray(azimuth, dtype=float))
    r = 90.0 - el
    return np.stack([r * np.sin(az), r * np.cos(az)], axis=-1)


def to_cartesian(track: PolarTrack) -> CartesianTrack:
    pts = np.array(track.points, dtype=float)
    xy = polar_to_xy(pts[:, 0], pts[:, 1])
    if np.any(np.einsum("ij,ij->i", xy, xy) > RIM_RADIUS**2 + 1e-6):
        raise ValueError("track point beyond the 25-degree rim")
    return CartesianTrack(xy, "observed")


def dtw_distance(a, b) -> float:
    """Classic DTW between two tracks (CartesianTrack or (n, 2) arrays)."""
    pa = a.points if isinstance(a, CartesianTrack) else np.asarray(a, dtype=float)
    pb = b.points if isinstance(b, CartesianTrack) else np.asarray(b, dtype=float)
    return kernels.dtw_distance(pa, pb)


def resample_arc_length(points, n: int) -> np.ndarray:
    """``n`` points evenly spaced by arc length along a polyline."""
    pts = np.asarray(points, dtype=float)
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]
    if total == 0.0:
        return np.repeat(pts[:1], n, axis=0)
    s = np.linspace(0.0, total, n)
    x = np.interp(s, cum, pts[:, 0])
    y = np.interp(s, cum, pts[:, 1])
    return np.stack([x, y], axis=1)


def _canonical(points: np.ndarray) -> tuple[np.ndarray, bool]:
    """Fix a traversal direction so results do not depend on input order."""
    first, last = tuple(points[0]), tuple(points[-1])
    if last < first:
        return points[::-1].copy(), True
    return points, False


def match_tracks(observed: np.ndarray, candidates: Mapping[int, np.ndarray], n_samples: int = 15):
    """Rank candidate trajectories against an observed polyline.

    Returns (best_id, best_distance, runner_up, orientation_flag, distances)
    where orientation_flag is True when the observed track matched reversed.
    """
    if not candidates:
        raise NoCandidates("no candidate trajectories")
    obs, flipped = _canonical(np.asarray(observed, dtype=float))
    fwd = resample_arc_length(obs, n_samples)
    rev = fwd[::-1].copy()
    ids = sorted(candidates)
    stack = np.stack([np.asarray(candidates[i], dtype=float) for i in ids])
    d_fwd = kernels.dtw_many(fwd, stack)
    d_rev = kernels.dtw_many(rev, stack)
    best_per = np.minimum(d_fwd, d_rev)
    order = np.lexsort((np.array(ids), best_per))
    b = order[0]
    runner = float(best_per[order[1]]) if len(order) > 1 else math.inf
    # reversed relative to the caller's point order
    used_rev = bool(d_rev[b] < d_fwd[b])
    distances = {int(i): float(d) for i, d in zip(ids, best_per)}
    return int(ids[b]), float(best_per[b]), runner, used_rev != flipped, distances


def candidate_trajectories(
    constellation: Constellation,
    obs: ObserverLocation,
    slot_start,
    config: MatchConfig | None = None,
    slot_len: float = SLOT_SECONDS,
) -> dict[int, np.ndarray]:
    """Cartesian trajectories of satellites visible at the slot midpoint."""
    config = config or MatchConfig()
    t0 = to_unix(slot_start)
    el, _, _, _, err = constellation.look(obs, [t0 + slot_len / 2.0])
    vis = np.flatnonzero((err[:, 0] == 0) & (el[:, 0] >= config.min_elevation))
    if vis.size == 0:
        return {}
    times = t0 + config.sample_step_s * np.arange(config.n_samples)
    el, az, _, _, err = constellation.look(obs, times, idx=vis)
    out = {}
    for k, i in enumerate(vis):
        if np.any(err[k] != 0):
            continue
        out[int(constellation.norad_ids[i])] = polar_to_xy(el[k], az[k])
    return out


def identify_satellite(
    track: PolarTrack,
    catalog,
    obs: ObserverLocation,
    slot_start,
    slot_len: float = SLOT_SECONDS,
    config: MatchConfig | None = None,
) -> MatchResult:
    """Pick the visible satellite whose slot trajectory best matches ``track``."""
    config = config or MatchConfig()
    constellation = catalog if isinstance(catalog, Constellation) else Constellation(catalog)
    cands = candidate_trajectories(constellation, obs, slot_start, config, slot_len)
    if not cands:
        raise NoCandidates(f"slot {track.slot_index}: no satellites visible")
    observed = to_cartesian(track).points
    best, dist, runner, rev, distances = match_tracks(observed, cands, config.n_samples)
    margin = runner - dist
    return MatchResult(
        slot_index=track.slot_index,
        best=best,
        best_distance=dist,
        runner_up_distance=runner,
        margin=margin,
        candidates_considered=len(cands),
        orientation="reversed" if rev else "forward",
        low_confidence=margin < config.min_margin,
        terminal_id=track.terminal_id,
        slot_start=slot_start,
        distances=distances,
    )


MATCH_CSV_HEADER = ["terminal_id", "slot_start_iso", "norad_id", "distance", "margin", "orientation", "candidates"]


def format_match_csv(results) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(MATCH_CSV_HEADER)
    for r in results:
        w.writerow(
            [
                r.terminal_id,
                isoformat(r.slot_start) if r.slot_start is not None else "",
                r.best,
                f"{r.best_distance:.6f}",
                "inf" if math.isinf(r.margin) else f"{r.margin:.6f}",
                r.orientation,
                r.candidates_considered,
            ]
        )
    return buf.getvalue()
