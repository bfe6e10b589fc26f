"""Trajectory extraction from a differenced obstruction map."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .geometry import DEFAULT_GEOMETRY, MapGeometry, pixel_to_polar
from .maps import ObstructionMap

MIN_COMPONENT_PX = 3
_EIGHT = np.ones((3, 3), dtype=bool)


class DecodeError(ValueError):
    pass


class EmptyDiff(DecodeError):
    pass


class AmbiguousDiff(DecodeError):
    pass


@dataclass
class PolarTrack:
    points: list[tuple[float, float]]  # (elevation, azimuth) degrees
    slot_index: int = 0
    terminal_id: str = ""
    pixels: list[tuple[int, int]] = field(default_factory=list)  # (col, row), same order

    def __post_init__(self):
        if len(self.points) < 3:
            raise ValueError("a track needs at least 3 points")
        for el, _ in self.points:
            if not 25.0 - 1e-9 <= el <= 90.0 + 1e-9:
                raise ValueError(f"elevation {el} outside [25, 90]")

    def reversed(self) -> "PolarTrack":
        return PolarTrack(self.points[::-1], self.slot_index, self.terminal_id, self.pixels[::-1])


def _m_neighbors(p: tuple[int, int], lit: set) -> list[tuple[int, int]]:
    """Mixed (m-) adjacency: diagonal links only when no shared 4-neighbor is lit."""
    r, c = p
    out = []
    for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
        q = (r + dr, c + dc)
        if q in lit:
            out.append(q)
    for dr, dc in ((-1, -1), (-1, 1), (1, -1), (1, 1)):
        q = (r + dr, c + dc)
        if q in lit and (r + dr, c) not in lit and (r, c + dc) not in lit:
            out.append(q)
    return out


def _chain_from(start, lit: set, adj: dict) -> list[tuple[int, int]]:
    path = [start]
    seen = {start}
    cur = start
    while True:
        cands = [q for q in adj[cur] if q not in seen]
        if not cands:
            return path
        cur = min(cands, key=lambda q: ((q[0] - cur[0]) ** 2 + (q[1] - cur[1]) ** 2, q))
        seen.add(cur)
        path.append(cur)


def chain_pixels(pixels) -> list[tuple[int, int]]:
    """Order a thin pixel set ((row, col) tuples) into a path; raises AmbiguousDiff on loops."""
    lit = set(pixels)
    adj = {p: _m_neighbors(p, lit) for p in lit}
    ends = sorted(p for p, nb in adj.items() if len(nb) == 1)
    if not ends:
        raise AmbiguousDiff("trail has no endpoint (closed loop)")
    best: list = []
    for e in ends:
        path = _chain_from(e, lit, adj)
        if len(path) > len(best):
            best = path
    return best


def extract_track(diff: ObstructionMap, geom: MapGeometry | None = None) -> PolarTrack:
    """Decode the single trail left in an XOR diff into an ordered polar track.

    Components smaller than three pixels are treated as noise. The direction
    of the returned track is arbitrary.
    """
    geom = geom or diff.geometry or DEFAULT_GEOMETRY
    if not diff.pixels.any():
        raise EmptyDiff(f"slot {diff.slot_index}: no lit pixels")
    labels, n = ndimage.label(diff.pixels, structure=_EIGHT)
    sizes = np.bincount(labels.ravel(), minlength=n + 1)
    sizes[0] = 0
    big = np.flatnonzero(sizes >= MIN_COMPONENT_PX)
    if big.size == 0:
        raise EmptyDiff(f"slot {diff.slot_index}: only noise specks ({int(sizes.sum())} px)")
    if big.size > 1:
        raise AmbiguousDiff(f"slot {diff.slot_index}: {big.size} trails in diff")
    rows, cols = np.nonzero(labels == big[0])
    path = chain_pixels(zip(rows.tolist(), cols.tolist()))
    if len(path) < 3:
        raise AmbiguousDiff(f"slot {diff.slot_index}: trail too short to order")
    pixels = [(c, r) for r, c in path]
    points = [pixel_to_polar(px, geom) for px in pixels]
    return PolarTrack(points, diff.slot_index, diff.terminal_id, pixels)
