"""Cohort-relative cluster keys and per-slot feature vectors."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from ..records import SlotRecord
from ..timeutil import as_utc

Z_CLAMP = 3
# z-scores are rounded to this many decimals before truncation so
# floating-point noise cannot flip a component at an exact boundary
_Z_DECIMALS = 9


class FeatureError(ValueError):
    pass


class ClusterKey(NamedTuple):
    z_theta: int  # azimuth
    z_phi: int  # elevation
    z_age: int
    sunlit: int

    def __str__(self) -> str:
        return f"({self.z_theta},{self.z_phi},{self.z_age},{self.sunlit})"


def quantize(z) -> np.ndarray:
    """Truncate toward zero, then clamp to [-3, 3]."""
    z = np.round(np.asarray(z, dtype=float), _Z_DECIMALS)
    return np.clip(np.trunc(z), -Z_CLAMP, Z_CLAMP).astype(int)


def zscores(values) -> np.ndarray:
    """Population z-scores; a zero spread gives all zeros."""
    v = np.asarray(values, dtype=float)
    mu = v.mean()
    sd = v.std()
    # a constant cohort can still show a rounding-level spread (mean of [1.9]*3 != 1.9)
    if np.ptp(v) == 0.0 or sd <= 1e-12 * np.abs(v).max():
        return np.zeros_like(v)
    return (v - mu) / sd


def unwrap_azimuth(az) -> np.ndarray:
    """Express azimuths within +/-180 deg of the cohort's circular mean."""
    a = np.radians(np.asarray(az, dtype=float))
    mean = np.arctan2(np.sin(a).mean(), np.cos(a).mean())
    d = np.mod(a - mean + np.pi, 2.0 * np.pi) - np.pi
    return np.degrees(mean + d)


def cohort_keys(azimuth, elevation, age, sunlit) -> list[ClusterKey]:
    """Cluster key of every member of one slot's visible cohort."""
    az = np.asarray(azimuth, dtype=float)
    if len(az) < 2:
        raise FeatureError("cohort needs at least 2 satellites")
    zt = quantize(zscores(unwrap_azimuth(az)))
    zp = quantize(zscores(elevation))
    za = quantize(zscores(age))
    lit = np.asarray(sunlit, dtype=bool).astype(int)
    return [ClusterKey(int(a), int(b), int(c), int(d)) for a, b, c, d in zip(zt, zp, za, lit)]


def _columns(cohort: Sequence):
    return (
        [s.azimuth for s in cohort],
        [s.elevation for s in cohort],
        [s.age for s in cohort],
        [s.sunlit for s in cohort],
    )


def cluster_assign(snapshot, cohort: Sequence) -> ClusterKey:
    if len(cohort) < 2:
        raise FeatureError("cohort needs at least 2 satellites")
    for i, s in enumerate(cohort):
        if s is snapshot or s == snapshot:
            return cohort_keys(*_columns(cohort))[i]
    raise FeatureError(f"satellite {snapshot.norad_id} is not in its cohort")


@dataclass(frozen=True)
class FeatureVector:
    t_local: int
    counts: dict  # ClusterKey -> count

    @property
    def total(self) -> int:
        return sum(self.counts.values())


@dataclass(frozen=True)
class LabeledSlot:
    features: FeatureVector
    label: ClusterKey

    def to_json(self) -> dict:
        return {
            "t_local": self.features.t_local,
            "counts": [list(k) + [c] for k, c in sorted(self.features.counts.items())],
            "label": list(self.label),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "LabeledSlot":
        counts = {ClusterKey(*map(int, row[:4])): int(row[4]) for row in obj["counts"]}
        return cls(FeatureVector(int(obj["t_local"]), counts), ClusterKey(*map(int, obj["label"])))


def local_minutes(t, tz_offset_minutes: int) -> int:
    t = as_utc(t)
    return (t.hour * 60 + t.minute + int(tz_offset_minutes)) % 1440


def featurize(record: SlotRecord, tz_offset_minutes: int = 0) -> LabeledSlot:
    if record.selected is None:
        raise FeatureError("record has no selection")
    keys = cohort_keys(*_columns(record.available))
    counts: dict[ClusterKey, int] = {}
    label = None
    for s, k in zip(record.available, keys):
        counts[k] = counts.get(k, 0) + 1
        if s.norad_id == record.selected:
            label = k
    if label is None:
        raise FeatureError(f"selected {record.selected} not in availability")
    return LabeledSlot(FeatureVector(local_minutes(record.slot_start, tz_offset_minutes), counts), label)


def featurize_all(records: Iterable[SlotRecord], tz_offset_minutes: int = 0) -> tuple[list[LabeledSlot], int]:
    """Featurize every record that has a selection and at least 2 candidates; returns (slots, skipped)."""
    out, skipped = [], 0
    for r in records:
        if r.selected is None or len(r.available) < 2:
            skipped += 1
            continue
        out.append(featurize(r, tz_offset_minutes))
    return out, skipped


def dumps_labeled(slots: Iterable[LabeledSlot]) -> str:
    return "".join(json.dumps(s.to_json(), sort_keys=True) + "\n" for s in slots)


def loads_labeled(text: str) -> list[LabeledSlot]:
    return [LabeledSlot.from_json(json.loads(line)) for line in text.splitlines() if line.strip()]
