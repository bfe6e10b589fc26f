"""TEME -> ECEF -> topocentric transforms, solar direction and umbra test."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..timeutil import unix_to_jd

DEG = np.pi / 180.0
# WGS-84 ellipsoid for observer positions
WGS84_A = 6378.137
WGS84_F = 1.0 / 298.257223563
WGS84_E2 = WGS84_F * (2.0 - WGS84_F)
EARTH_RADIUS_KM = 6378.137


@dataclass(frozen=True)
class ObserverLocation:
    latitude: float
    longitude: float
    altitude: float = 0.0  # meters

    def __post_init__(self):
        if not -90.0 <= self.latitude <= 90.0:
            raise ValueError(f"latitude {self.latitude} outside [-90, 90]")
        if not -180.0 <= self.longitude <= 180.0:
            raise ValueError(f"longitude {self.longitude} outside [-180, 180]")

    @classmethod
    def parse(cls, text: str) -> "ObserverLocation":
        parts = [float(p) for p in text.split(",")]
        if len(parts) == 2:
            parts.append(0.0)
        if len(parts) != 3:
            raise ValueError(f"expected LAT,LON[,ALT], got {text!r}")
        return cls(*parts)


@dataclass(frozen=True)
class Topocentric:
    elevation: float  # degrees
    azimuth: float  # degrees, 0 = north, clockwise
    range: float  # km


def gmst(t_unix):
    """Greenwich mean sidereal time in radians (IAU-82, UT1 taken as UTC)."""
    jd = unix_to_jd(t_unix)
    tut1 = (jd - 2451545.0) / 36525.0
    sec = (
        -6.2e-6 * tut1**3
        + 0.093104 * tut1**2
        + (876600.0 * 3600.0 + 8640184.812866) * tut1
        + 67310.54841
    )
    g = np.fmod(sec * DEG / 240.0, 2.0 * np.pi)
    return np.where(g < 0.0, g + 2.0 * np.pi, g)


def teme_to_ecef(r, t_unix):
    """Rotate TEME vectors (..., 3) about z by GMST; t_unix broadcasts against r[..., 0]."""
    r = np.asarray(r, dtype=float)
    g = gmst(t_unix)
    c, s = np.cos(g), np.sin(g)
    x = c * r[..., 0] + s * r[..., 1]
    y = -s * r[..., 0] + c * r[..., 1]
    return np.stack([x, y, r[..., 2]], axis=-1)


def ecef_to_teme(r, t_unix):
    r = np.asarray(r, dtype=float)
    g = gmst(t_unix)
    c, s = np.cos(g), np.sin(g)
    x = c * r[..., 0] - s * r[..., 1]
    y = s * r[..., 0] + c * r[..., 1]
    return np.stack([x, y, r[..., 2]], axis=-1)


def observer_ecef(obs: ObserverLocation) -> np.ndarray:
    lat, lon = obs.latitude * DEG, obs.longitude * DEG
    h = obs.altitude / 1000.0
    n = WGS84_A / np.sqrt(1.0 - WGS84_E2 * np.sin(lat) ** 2)
    return np.array(
        [
            (n + h) * np.cos(lat) * np.cos(lon),
            (n + h) * np.cos(lat) * np.sin(lon),
            (n * (1.0 - WGS84_E2) + h) * np.sin(lat),
        ]
    )


def enu_basis(obs: ObserverLocation) -> np.ndarray:
    """Rows: east, north, up unit vectors (ECEF) at the geodetic observer."""
    lat, lon = obs.latitude * DEG, obs.longitude * DEG
    east = np.array([-np.sin(lon), np.cos(lon), 0.0])
    north = np.array([-np.sin(lat) * np.cos(lon), -np.sin(lat) * np.sin(lon), np.cos(lat)])
    up = np.array([np.cos(lat) * np.cos(lon), np.cos(lat) * np.sin(lon), np.sin(lat)])
    return np.stack([east, north, up])


def look_angles_array(r_teme, t_unix, obs: ObserverLocation):
    """Vectorized elevation/azimuth (degrees) and range (km)."""
    rho = teme_to_ecef(r_teme, t_unix) - observer_ecef(obs)
    enu = rho @ enu_basis(obs).T
    rng = np.linalg.norm(enu, axis=-1)
    el = np.degrees(np.arcsin(np.clip(enu[..., 2] / rng, -1.0, 1.0)))
    az = np.degrees(np.arctan2(enu[..., 0], enu[..., 1]))
    az = np.mod(az, 360.0)
    az = np.where(az >= 360.0, 0.0, az)
    return el, az, rng


def look_angles(state, obs: ObserverLocation) -> Topocentric:
    from ..timeutil import to_unix

    el, az, rng = look_angles_array(np.asarray(state.position), to_unix(state.t), obs)
    return Topocentric(float(el), float(az), float(rng))


def position_from_look_angles(obs: ObserverLocation, topo: Topocentric, t_unix) -> np.ndarray:
    """TEME position of a point seen at ``topo`` from ``obs`` at time ``t_unix``."""
    el, az = topo.elevation * DEG, topo.azimuth * DEG
    local = np.array([np.cos(el) * np.sin(az), np.cos(el) * np.cos(az), np.sin(el)]) * topo.range
    ecef = observer_ecef(obs) + local @ enu_basis(obs)
    return ecef_to_teme(ecef, t_unix)


def sun_direction(t_unix) -> np.ndarray:
    """Unit vector toward the Sun in the mean-equator frame (~0.01 deg accuracy).

    Low-precision solar coordinates from the Astronomical Almanac.
    """
    n = unix_to_jd(t_unix) - 2451545.0
    L = (280.460 + 0.9856474 * n) * DEG
    g = (357.528 + 0.9856003 * n) * DEG
    lam = L + (1.915 * np.sin(g) + 0.020 * np.sin(2.0 * g)) * DEG
    eps = (23.439 - 0.0000004 * n) * DEG
    return np.stack(
        [np.cos(lam), np.cos(eps) * np.sin(lam), np.sin(eps) * np.sin(lam)], axis=-1
    )


def in_umbra(r, sun_dir):
    """Cylindrical shadow test; r (..., 3) km, sun_dir unit vectors broadcastable."""
    r = np.asarray(r, dtype=float)
    along = np.sum(r * sun_dir, axis=-1)
    perp = np.linalg.norm(r - along[..., None] * sun_dir, axis=-1)
    return (along < 0.0) & (perp < EARTH_RADIUS_KM)


def sunlit_array(r_teme, t_unix):
    return ~in_umbra(r_teme, sun_direction(t_unix))
