"""Launch-date catalog: satellite age and (year, month) launch bins."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from datetime import date, datetime
from pathlib import Path
from typing import Mapping

from ..timeutil import to_unix
from .tle import _DESIGNATOR_RE

LaunchCatalog = Mapping[int, date]


class UnknownLaunchError(KeyError):
    pass


@dataclass(frozen=True, order=True)
class LaunchBin:
    year: int
    month: int
    low_precision: bool = False

    @property
    def key(self) -> tuple[int, int]:
        return (self.year, self.month)


def read_launch_catalog(source) -> dict[int, date]:
    """Read ``norad_id,launch_date`` CSV from a path or text."""
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source and Path(source).exists()):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source
    out: dict[int, date] = {}
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or not {"norad_id", "launch_date"} <= set(reader.fieldnames):
        raise ValueError("launch catalog needs header norad_id,launch_date")
    for lineno, row in enumerate(reader, start=2):
        try:
            out[int(row["norad_id"])] = date.fromisoformat(row["launch_date"].strip()[:10])
        except (TypeError, ValueError) as exc:
            raise ValueError(f"launch catalog line {lineno}: {exc}") from None
    return out


def write_launch_catalog(catalog: LaunchCatalog) -> str:
    buf = io.StringIO()
    buf.write("norad_id,launch_date\n")
    for norad_id in sorted(catalog):
        buf.write(f"{norad_id},{catalog[norad_id].isoformat()}\n")
    return buf.getvalue()


def _designator_year(designator: str | None) -> int | None:
    if not designator:
        return None
    m = _DESIGNATOR_RE.match(designator.strip())
    if not m:
        return None
    yy = int(m.group(1))
    return 1900 + yy if yy >= 57 else 2000 + yy


def launch_date(norad_id: int, launch_catalog: LaunchCatalog | None, designator: str | None = None) -> tuple[date, bool]:
    """Launch date and whether it is a low-precision (designator-year) fallback."""
    if launch_catalog is not None and norad_id in launch_catalog:
        return launch_catalog[norad_id], False
    year = _designator_year(designator)
    if year is None:
        raise UnknownLaunchError(f"no launch date for {norad_id} and designator {designator!r} unparsable")
    return date(year, 1, 1), True


def satellite_age(norad_id: int, launch_catalog: LaunchCatalog | None, t, designator: str | None = None) -> float:
    """Age in fractional days at ``t`` (datetime or unix seconds)."""
    d, _ = launch_date(norad_id, launch_catalog, designator)
    t_unix = to_unix(t) if isinstance(t, (datetime, date)) else float(t)
    return (t_unix - to_unix(d)) / 86400.0


def launch_bin(norad_id: int, launch_catalog: LaunchCatalog | None, designator: str | None = None) -> LaunchBin:
    d, low = launch_date(norad_id, launch_catalog, designator)
    if low:
        return LaunchBin(d.year, 1, True)
    return LaunchBin(d.year, d.month, False)
