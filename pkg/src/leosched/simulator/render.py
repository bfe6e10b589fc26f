"""Draw a serving satellite's slot trajectory onto a cumulative obstruction map."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..obstruction.geometry import DEFAULT_GEOMETRY, MapGeometry, polar_to_pixel
from ..obstruction.maps import ObstructionMap
from ..orbital.frames import ObserverLocation
from ..orbital.visibility import DEFAULT_MIN_ELEVATION, Constellation
from ..timeutil import to_unix

SAMPLE_STEP_S = 1.0
SAMPLES_PER_SLOT = 15


class RenderError(ValueError):
    pass


def line_pixels(p0: tuple[int, int], p1: tuple[int, int]) -> list[tuple[int, int]]:
    """Bresenham line from p0 to p1 inclusive, as (col, row) pixels."""
    x0, y0 = p0
    x1, y1 = p1
    dx, dy = abs(x1 - x0), -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    out = []
    while True:
        out.append((x0, y0))
        if x0 == x1 and y0 == y1:
            return out
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x0 += sx
        if e2 <= dx:
            err += dx
            y0 += sy


def trail_pixels(points: Sequence[tuple[float, float]], geom: MapGeometry = DEFAULT_GEOMETRY) -> list[tuple[int, int]]:
    """8-connected pixel trail through the (elevation, azimuth) samples."""
    px = []
    for el, az in points:
        p = polar_to_pixel(el, az, geom)
        if not px or px[-1] != p:
            px.append(p)
    if not px:
        return []
    out = [px[0]]
    for a, b in zip(px, px[1:]):
        out.extend(line_pixels(a, b)[1:])
    return out


def render_track(
    points: Sequence[tuple[float, float]],
    prior: ObstructionMap,
    geom: MapGeometry = DEFAULT_GEOMETRY,
    captured_at=None,
    slot_index: int | None = None,
) -> ObstructionMap:
    """Copy of ``prior`` with the trail through ``points`` lit."""
    out = prior.copy()
    for col, row in trail_pixels(points, geom):
        out.pixels[row, col] = True
    if captured_at is not None:
        out.captured_at = captured_at
    if slot_index is not None:
        out.slot_index = slot_index
    return out


def slot_look_angles(
    constellation: Constellation,
    norad_id: int,
    obs: ObserverLocation,
    slot_start,
    step_s: float = SAMPLE_STEP_S,
    n: int = SAMPLES_PER_SLOT,
) -> np.ndarray:
    """(n, 2) array of (elevation, azimuth) sampled over the slot."""
    t = to_unix(slot_start) + step_s * np.arange(n)
    el, az, _, _, err = constellation.look(obs, t, idx=[constellation.index_of(norad_id)])
    if np.any(err != 0):
        raise RenderError(f"satellite {norad_id}: propagation failed in slot")
    return np.stack([el[0], az[0]], axis=1)


def render_slot(
    selected: int,
    slot_start,
    obs: ObserverLocation,
    prior: ObstructionMap,
    constellation: Constellation,
    geom: MapGeometry = DEFAULT_GEOMETRY,
    min_elevation: float = DEFAULT_MIN_ELEVATION,
    slot_index: int | None = None,
) -> tuple[ObstructionMap, list[tuple[int, int]]]:
    """Render the selected satellite's slot trail; returns the map and the trail pixels.

    Samples below the map rim are not drawn.
    """
    ea = slot_look_angles(constellation, selected, obs, slot_start)
    if not np.any(ea[:, 0] >= min_elevation):
        raise RenderError(f"satellite {selected} never above {min_elevation} deg in slot")
    pts = [(float(e), float(a)) for e, a in ea if e >= geom.elevation_at_rim]
    trail = trail_pixels(pts, geom)
    m = render_track(pts, prior, geom, slot_start, slot_index)
    return m, trail
