"""UTC time helpers shared across modules.

Public APIs take timezone-aware ``datetime`` objects; numeric kernels work in
float unix seconds.
"""

from __future__ import annotations

import calendar
from datetime import date, datetime, timedelta, timezone

import numpy as np

UTC = timezone.utc
JD_UNIX_EPOCH = 2440587.5


def as_utc(t: datetime) -> datetime:
    if t.tzinfo is None:
        return t.replace(tzinfo=UTC)
    return t.astimezone(UTC)


def to_unix(t) -> float:
    """Seconds since 1970-01-01T00:00Z for a datetime, date or number."""
    if isinstance(t, datetime):
        t = as_utc(t)
        return calendar.timegm(t.utctimetuple()) + t.microsecond * 1e-6
    if isinstance(t, date):
        return float(calendar.timegm(t.timetuple()))
    return float(t)


def from_unix(s: float) -> datetime:
    whole = int(np.floor(s))
    micro = int(round((s - whole) * 1e6))
    return datetime(1970, 1, 1, tzinfo=UTC) + timedelta(seconds=whole, microseconds=micro)


def unix_to_jd(s):
    return np.asarray(s, dtype=float) / 86400.0 + JD_UNIX_EPOCH


def isoformat(t: datetime) -> str:
    t = as_utc(t)
    if t.microsecond:
        return t.strftime("%Y-%m-%dT%H:%M:%S.%fZ")
    return t.strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_iso(text: str) -> datetime:
    text = text.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    return as_utc(datetime.fromisoformat(text))
