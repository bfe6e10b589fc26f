"""Pixel <-> (elevation, azimuth) geometry of the 123x123 polar obstruction map."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAP_SIZE = 123


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class MapGeometry:
    center: tuple[int, int] = (62, 62)  # (col, row)
    radius_px: int = 45
    elevation_at_rim: float = 25.0
    elevation_at_center: float = 90.0
    clockwise: bool = True  # azimuth increases clockwise from image-up

    @property
    def span(self) -> float:
        return self.elevation_at_center - self.elevation_at_rim


DEFAULT_GEOMETRY = MapGeometry()

# real captures may carry rim pixels whose centers sit just past the radius
RIM_TOLERANCE_PX = 0.5


def pixel_to_polar(px, geom: MapGeometry = DEFAULT_GEOMETRY) -> tuple[float, float]:
    """(col, row) -> (elevation, azimuth) in degrees."""
    col, row = px
    dx = col - geom.center[0]
    dy = row - geom.center[1]
    r = math.hypot(dx, dy)
    if r > geom.radius_px + RIM_TOLERANCE_PX:
        raise GeometryError(f"pixel {px} is {r:.2f} px from center, outside the polar disk")
    el = geom.elevation_at_center - min(r, geom.radius_px) / geom.radius_px * geom.span
    if r == 0.0:
        return el, 0.0
    if geom.clockwise:
        az = math.degrees(math.atan2(dx, -dy))
    else:
        az = math.degrees(math.atan2(-dx, -dy))
    az %= 360.0
    if az >= 360.0:
        az = 0.0
    return el, az


def _round_half_away(x: float) -> int:
    return int(math.floor(abs(x) + 0.5)) * (1 if x >= 0 else -1)


def polar_to_pixel(elevation: float, azimuth: float, geom: MapGeometry = DEFAULT_GEOMETRY) -> tuple[int, int]:
    """Nearest disk pixel to (elevation, azimuth); rounds half away from zero.

    Offsets that round past the rim are pulled back to the nearest pixel
    inside the disk so rendered maps never leave it.
    """
    if not geom.elevation_at_rim - 1e-9 <= elevation <= geom.elevation_at_center + 1e-9:
        raise GeometryError(f"elevation {elevation} outside [{geom.elevation_at_rim}, {geom.elevation_at_center}]")
    r = (geom.elevation_at_center - elevation) / geom.span * geom.radius_px
    a = math.radians(azimuth)
    dx = r * math.sin(a)
    dy = -r * math.cos(a)
    if not geom.clockwise:
        dx = -dx
    ix, iy = _round_half_away(dx), _round_half_away(dy)
    lim = geom.radius_px**2
    if ix * ix + iy * iy > lim:
        best = None
        for cx in (math.floor(dx), math.ceil(dx)):
            for cy in (math.floor(dy), math.ceil(dy)):
                if cx * cx + cy * cy <= lim:
                    d = (cx - dx) ** 2 + (cy - dy) ** 2
                    if best is None or d < best[0]:
                        best = (d, cx, cy)
        if best is None:  # pragma: no cover - unreachable for r <= radius
            raise GeometryError("no disk pixel near target")
        ix, iy = best[1], best[2]
    return geom.center[0] + ix, geom.center[1] + iy


@lru_cache(maxsize=8)
def disk_mask(geom: MapGeometry = DEFAULT_GEOMETRY, tolerance: float = 0.0) -> np.ndarray:
    """Boolean (row, col) mask of pixels whose centers lie within radius + tolerance."""
    rows, cols = np.mgrid[0:MAP_SIZE, 0:MAP_SIZE]
    d2 = (cols - geom.center[0]) ** 2 + (rows - geom.center[1]) ** 2
    mask = d2 <= (geom.radius_px + tolerance) ** 2
    mask.setflags(write=False)
    return mask


def disk_pixels(geom: MapGeometry = DEFAULT_GEOMETRY) -> list[tuple[int, int]]:
    rows, cols = np.nonzero(disk_mask(geom))
    return [(int(c), int(r)) for r, c in zip(rows, cols)]
