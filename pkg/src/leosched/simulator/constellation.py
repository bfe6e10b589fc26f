"""Walker-delta constellation synthesis: TLE records plus a launch catalog."""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date, datetime
from typing import Sequence

import numpy as np

from ..orbital.tle import TleRecord, format_tle, parse_pair
from ..timeutil import as_utc

MU_EARTH = 398600.4418  # km^3/s^2
EARTH_RADIUS_KM = 6378.0
FIRST_NORAD_ID = 44000


class ShellError(ValueError):
    pass


@dataclass(frozen=True)
class Shell:
    count: int
    planes: int
    inclination: float  # deg
    altitude: float  # km
    phasing: int = 1

    def validate(self) -> None:
        if self.count <= 0 or self.planes <= 0:
            raise ShellError("satellite and plane counts must be positive")
        if self.count % self.planes:
            raise ShellError(f"{self.count} satellites do not divide into {self.planes} planes")
        if not (0.0 <= self.inclination <= 180.0):
            raise ShellError(f"inclination {self.inclination} outside [0, 180]")
        if not (150.0 <= self.altitude <= 2000.0):
            raise ShellError(f"altitude {self.altitude} km outside the low-Earth-orbit range")
        if not (0 <= self.phasing < self.planes):
            raise ShellError(f"phasing {self.phasing} must be in [0, planes)")


STARLINK_LIKE = (Shell(1584, 22, 53.0, 550.0, 1),)


def mean_motion_rev_per_day(altitude_km: float) -> float:
    """Kepler's third law for a circular orbit at ``altitude_km``."""
    a = EARTH_RADIUS_KM + altitude_km
    period = 2.0 * math.pi * math.sqrt(a**3 / MU_EARTH)
    return 86400.0 / period


def _month_bins(epoch: datetime, n: int) -> list[tuple[int, int]]:
    """The ``n`` calendar months preceding the epoch month, oldest first."""
    y, m = epoch.year, epoch.month
    out = []
    for _ in range(n):
        m -= 1
        if m == 0:
            y, m = y - 1, 12
        out.append((y, m))
    return out[::-1]


def generate_constellation(
    shells: Sequence[Shell] = STARLINK_LIKE,
    epoch: datetime | None = None,
    seed: int = 0,
    launch_months: int = 72,
    first_norad_id: int = FIRST_NORAD_ID,
) -> tuple[list[TleRecord], dict[int, date]]:
    """Walker-delta TLEs (all at one epoch) and a synthetic launch catalog.

    Plane p of P has RAAN 360*p/P; slot s of S in a plane has mean anomaly
    360*s/S + 360*F*p/T. Satellites are assigned to ``launch_months``
    monthly launch bins by a seeded shuffle so launch date carries no
    geometric signal.
    """
    epoch = as_utc(epoch or datetime(2025, 1, 15))
    shells = [s if isinstance(s, Shell) else Shell(*s) for s in shells]
    for s in shells:
        s.validate()
    total = sum(s.count for s in shells)
    if first_norad_id + total > 99999:
        raise ShellError("NORAD ids would exceed 5 digits")
    rng = np.random.default_rng(seed)
    months = _month_bins(epoch, launch_months)
    bin_of = rng.permutation(np.arange(total) % len(months))
    launch_day = rng.integers(1, 29, size=len(months))

    records: list[TleRecord] = []
    launches: dict[int, date] = {}
    launch_piece: dict[int, int] = {}
    k = 0
    for shell in shells:
        per_plane = shell.count // shell.planes
        mm = mean_motion_rev_per_day(shell.altitude)
        for p in range(shell.planes):
            raan = 360.0 * p / shell.planes
            for s in range(per_plane):
                ma = (360.0 * s / per_plane + 360.0 * shell.phasing * p / shell.count) % 360.0
                norad = first_norad_id + k
                b = int(bin_of[k])
                year, month = months[b]
                launches[norad] = date(year, month, int(launch_day[b]))
                piece = launch_piece.get(b, 0)
                launch_piece[b] = piece + 1
                intl = f"{year % 100:02d}{b + 1:03d}{_piece_letters(piece)}"
                l1, l2 = format_tle(
                    norad,
                    intl,
                    epoch,
                    mm,
                    1.0e-4,
                    shell.inclination,
                    raan,
                    0.0,
                    ma,
                )
                records.append(parse_pair(l1, l2, f"SIM-{norad}"))
                k += 1
    return records, launches


def _piece_letters(i: int) -> str:
    """A, B, ..., Z, AA, AB, ... (at most three letters)."""
    letters = ""
    i += 1
    while i:
        i, r = divmod(i - 1, 26)
        letters = chr(ord("A") + r) + letters
    return letters[:3]


def format_catalog(records: Sequence[TleRecord]) -> str:
    out = []
    for r in records:
        if r.name:
            out.append(r.name)
        out.extend([r.line1, r.line2])
    return "\n".join(out) + "\n"
