"""Configurable-preference global scheduler used as the simulation ground truth."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..orbital.visibility import DEFAULT_MIN_ELEVATION


class ConfigError(ValueError):
    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass(frozen=True)
class GeoExclusion:
    """Forbidden sky wedge; an azimuth range with lo > hi wraps through north."""

    azimuth: tuple[float, float]
    elevation: tuple[float, float]

    def contains(self, az, el) -> np.ndarray:
        az = np.mod(np.asarray(az, dtype=float), 360.0)
        el = np.asarray(el, dtype=float)
        lo, hi = self.azimuth
        in_az = (az >= lo) & (az <= hi) if lo <= hi else (az >= lo) | (az <= hi)
        return in_az & (el >= self.elevation[0]) & (el <= self.elevation[1])


@dataclass(frozen=True)
class SchedulerConfig:
    weights: tuple = (1.0, 0.0, 0.0, 0.0)  # elevation, north, age, sunlit
    epoch_offset_s: int = 12
    min_elevation: float = DEFAULT_MIN_ELEVATION
    geo_exclusion: GeoExclusion | None = None
    noise_temperature: float = 0.0
    seed: int = 0

    def problems(self) -> list[str]:
        out = []
        if len(self.weights) != 4:
            out.append("weights must have 4 entries (elevation, north, age, sunlit)")
        elif any(not math.isfinite(w) or w < 0 for w in self.weights):
            out.append("weights must be finite and non-negative")
        elif all(w == 0 for w in self.weights) and self.noise_temperature <= 0:
            out.append("all-zero weights need noise_temperature > 0 (uniform-random mode)")
        if not (0 <= self.epoch_offset_s < 15) or int(self.epoch_offset_s) != self.epoch_offset_s:
            out.append("epoch_offset_s must be an integer in [0, 15)")
        if not (0.0 <= self.min_elevation < 90.0):
            out.append("min_elevation must be in [0, 90)")
        if not (math.isfinite(self.noise_temperature) and self.noise_temperature >= 0):
            out.append("noise_temperature must be >= 0")
        if self.geo_exclusion is not None:
            g = self.geo_exclusion
            if not all(0.0 <= a <= 360.0 for a in g.azimuth):
                out.append("geo_exclusion azimuth bounds must be in [0, 360]")
            if not (0.0 <= g.elevation[0] <= g.elevation[1] <= 90.0):
                out.append("geo_exclusion elevation range must satisfy 0 <= lo <= hi <= 90")
        return out

    def validate(self) -> "SchedulerConfig":
        p = self.problems()
        if p:
            raise ConfigError(p)
        return self


def _minmax(v: np.ndarray) -> np.ndarray:
    lo, hi = v.min(), v.max()
    if hi == lo:
        return np.zeros_like(v)
    return (v - lo) / (hi - lo)


@dataclass
class Decision:
    norad_id: int
    fallback: bool = False  # every candidate sat inside the exclusion wedge
    scores: dict = field(default_factory=dict, repr=False)


def score_cohort(elevation, azimuth, age, sunlit, weights) -> np.ndarray:
    w_el, w_north, w_age, w_lit = weights
    el = np.asarray(elevation, dtype=float)
    return (
        w_el * _minmax(el)
        + w_north * np.cos(np.radians(np.asarray(azimuth, dtype=float)))
        + w_age * (1.0 - _minmax(np.asarray(age, dtype=float)))
        + w_lit * np.asarray(sunlit, dtype=float)
    )


def schedule_slot(available: Sequence, cfg: SchedulerConfig, rng: np.random.Generator | None = None) -> Decision:
    """Choose the serving satellite for one slot.

    The cohort is sorted by NORAD id first, so the result does not depend on
    input order; argmax ties go to the lowest id.
    """
    if not available:
        raise ValueError("no available satellites")
    cohort = sorted(available, key=lambda s: s.norad_id)
    ids = np.array([s.norad_id for s in cohort])
    el = np.array([s.elevation for s in cohort])
    az = np.array([s.azimuth for s in cohort])
    age = np.array([s.age for s in cohort])
    lit = np.array([s.sunlit for s in cohort], dtype=float)
    fallback = False
    keep = np.ones(len(cohort), dtype=bool)
    if cfg.geo_exclusion is not None:
        keep = ~cfg.geo_exclusion.contains(az, el)
        if not keep.any():
            keep[:] = True
            fallback = True
    ids, el, az, age, lit = ids[keep], el[keep], az[keep], age[keep], lit[keep]
    score = score_cohort(el, az, age, lit, cfg.weights)
    if cfg.noise_temperature == 0 or fallback:
        pick = int(np.argmax(score))
    else:
        if rng is None:
            raise ValueError("softmax selection needs an rng")
        z = (score - score.max()) / cfg.noise_temperature
        p = np.exp(z)
        p /= p.sum()
        pick = int(rng.choice(len(ids), p=p))
    return Decision(int(ids[pick]), fallback, {int(i): float(s) for i, s in zip(ids, score)})
