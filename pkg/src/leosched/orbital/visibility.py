"""Satellite states, per-instant snapshots and field-of-view queries."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from datetime import datetime
from typing import Sequence

import numpy as np

from ..timeutil import from_unix, to_unix
from .frames import ObserverLocation, Topocentric, look_angles_array, sunlit_array
from .launches import LaunchCatalog, UnknownLaunchError, launch_date
from .sgp4 import PropagationError, Sgp4Batch
from .tle import TleRecord

log = logging.getLogger(__name__)

DEFAULT_MIN_ELEVATION = 25.0
DEFAULT_MAX_EPOCH_AGE_DAYS = 7.0


class StaleElementsError(ValueError):
    pass


@dataclass(frozen=True)
class SatelliteState:
    norad_id: int
    t: datetime
    position: tuple[float, float, float]  # km, TEME
    velocity: tuple[float, float, float]  # km/s


@dataclass(frozen=True)
class SatelliteSnapshot:
    norad_id: int
    t: datetime
    topo: Topocentric
    age: float  # days since launch
    sunlit: bool

    @property
    def elevation(self) -> float:
        return self.topo.elevation

    @property
    def azimuth(self) -> float:
        return self.topo.azimuth


def _check_epoch_age(rec: TleRecord, t_unix: float, max_age_days: float | None) -> None:
    if max_age_days is None:
        return
    age = abs(t_unix - rec.epoch_unix) / 86400.0
    if age > max_age_days:
        raise StaleElementsError(
            f"satellite {rec.norad_id}: |t - epoch| = {age:.2f} d exceeds {max_age_days} d"
        )


def propagate(rec: TleRecord, t, max_age_days: float | None = DEFAULT_MAX_EPOCH_AGE_DAYS) -> SatelliteState:
    t_unix = to_unix(t)
    _check_epoch_age(rec, t_unix, max_age_days)
    r, v, err = Sgp4Batch.from_records([rec]).propagate_unix([t_unix])
    if err[0, 0]:
        raise PropagationError(rec.norad_id, int(err[0, 0]))
    return SatelliteState(
        rec.norad_id, from_unix(t_unix), tuple(map(float, r[0, 0])), tuple(map(float, v[0, 0]))
    )


def is_sunlit(state: SatelliteState, t=None) -> bool:
    t_unix = to_unix(state.t if t is None else t)
    return bool(sunlit_array(np.asarray(state.position), t_unix))


class Constellation:
    """A TLE catalog prepared for repeated vectorized queries."""

    def __init__(
        self,
        records: Sequence[TleRecord],
        launches: LaunchCatalog | None = None,
        max_age_days: float | None = DEFAULT_MAX_EPOCH_AGE_DAYS,
    ):
        self.records = list(records)
        self.launches = launches
        self.max_age_days = max_age_days
        self.norad_ids = np.array([r.norad_id for r in self.records], dtype=np.int64)
        self._index = {int(n): i for i, n in enumerate(self.norad_ids)}
        self.batch = Sgp4Batch.from_records(self.records) if self.records else None
        self.epoch_unix = np.array([r.epoch_unix for r in self.records], dtype=float)
        launch = np.full(len(self.records), np.nan)
        for i, rec in enumerate(self.records):
            try:
                d, _ = launch_date(rec.norad_id, launches, rec.intl_designator)
                launch[i] = to_unix(d)
            except UnknownLaunchError:
                pass
        self.launch_unix = launch

    def __len__(self) -> int:
        return len(self.records)

    def index_of(self, norad_id: int) -> int:
        return self._index[int(norad_id)]

    def look(self, obs: ObserverLocation, t_unix, idx=None):
        """Elevation, azimuth, range, sunlit and error arrays of shape (n, T)."""
        t = np.atleast_1d(np.asarray(t_unix, dtype=float))
        batch = self.batch if idx is None else self.batch.subset(idx)
        r, _, err = batch.propagate_unix(t)
        epochs = batch.epoch_unix[:, None]
        if self.max_age_days is not None:
            stale = np.abs(t[None, :] - epochs) > self.max_age_days * 86400.0
            err = np.where(stale & (err == 0), -1, err)
        el, az, rng = look_angles_array(r, t[None, :], obs)
        lit = sunlit_array(r, t[None, :])
        return el, az, rng, lit, err

    def snapshots(
        self, obs: ObserverLocation, t, min_elevation: float = DEFAULT_MIN_ELEVATION
    ) -> tuple[list[SatelliteSnapshot], int]:
        """Snapshots above ``min_elevation`` at ``t`` plus the count of skipped satellites."""
        if not self.records:
            return [], 0
        t_unix = to_unix(t)
        el, az, rng, lit, err = self.look(obs, [t_unix])
        el, az, rng, lit, err = el[:, 0], az[:, 0], rng[:, 0], lit[:, 0], err[:, 0]
        failed = err != 0
        no_age = np.isnan(self.launch_unix)
        skipped = int(np.count_nonzero(failed | no_age))
        if skipped:
            log.debug("skipped %d satellites (propagation or launch-date errors)", skipped)
        keep = np.flatnonzero(~failed & ~no_age & (el >= min_elevation))
        keep = keep[np.argsort(self.norad_ids[keep], kind="stable")]
        when = from_unix(t_unix)
        out = []
        for i in keep:
            age = max(0.0, (t_unix - self.launch_unix[i]) / 86400.0)
            out.append(
                SatelliteSnapshot(
                    int(self.norad_ids[i]),
                    when,
                    Topocentric(float(el[i]), float(az[i]), float(rng[i])),
                    age,
                    bool(lit[i]),
                )
            )
        return out, skipped


def visible_satellites(
    catalog,
    obs: ObserverLocation,
    t,
    min_elevation: float = DEFAULT_MIN_ELEVATION,
    launches: LaunchCatalog | None = None,
) -> list[SatelliteSnapshot]:
    """All satellites at or above ``min_elevation``; failures are skipped and logged."""
    if not isinstance(catalog, Constellation):
        if not catalog:
            return []
        catalog = Constellation(catalog, launches)
    snaps, skipped = catalog.snapshots(obs, t, min_elevation)
    if skipped:
        log.info("visible_satellites: %d satellites skipped", skipped)
    return snaps
