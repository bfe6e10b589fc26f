"""Scheduler-preference statistics from (availability, selection) slot records."""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from datetime import date
from typing import Mapping, Sequence

import numpy as np

from .records import SlotRecord
from .svg import Plot
from .trace_analysis import _midranks

log = logging.getLogger(__name__)

HIGH_BAND = (45.0, 90.0)
QUADRANTS = ("NE", "SE", "SW", "NW")  # [0,90), [90,180), [180,270), [270,360)


class AnalyticsError(ValueError):
    pass


def _selected(records: Sequence[SlotRecord]) -> list[SlotRecord]:
    recs = [r for r in records if r.selected is not None and r.available]
    if not recs:
        raise AnalyticsError("no records with a selection")
    return recs


def ecdf(values) -> tuple[np.ndarray, np.ndarray]:
    v = np.sort(np.asarray(values, dtype=float))
    return v, np.arange(1, len(v) + 1) / max(len(v), 1)


@dataclass
class ElevationReport:
    cdf_selected: tuple
    cdf_available: tuple
    median_selected: float
    median_available: float
    median_gap: float
    high_band_available: float
    high_band_selected: float


def elevation_report(records: Sequence[SlotRecord]) -> ElevationReport:
    """Selected versus available-but-not-selected elevations."""
    recs = _selected(records)
    sel = np.array([r.selected_snapshot().elevation for r in recs])
    oth = np.array([s.elevation for r in recs for s in r.others()])
    med_s = float(np.median(sel))
    med_o = float(np.median(oth)) if oth.size else math.nan

    def band(v):
        return float(np.mean((v >= HIGH_BAND[0]) & (v <= HIGH_BAND[1]))) if v.size else math.nan

    return ElevationReport(ecdf(sel), ecdf(oth), med_s, med_o, med_s - med_o, band(oth), band(sel))


def quadrant_of(azimuth) -> np.ndarray:
    """0=NE, 1=SE, 2=SW, 3=NW; boundary azimuths go to the later quadrant."""
    return (np.floor(np.mod(np.asarray(azimuth, dtype=float), 360.0) / 90.0).astype(int)) % 4


@dataclass
class AzimuthReport:
    available: dict  # quadrant -> share
    selected: dict
    north_available: float
    north_selected: float


def azimuth_report(records: Sequence[SlotRecord], boresight_offset: float = 0.0) -> AzimuthReport:
    """Quadrant shares of availability (not selected) and of selections.

    Azimuths are in the map frame; ``boresight_offset`` is subtracted first
    for terminals whose face is not aligned with north.
    """
    recs = _selected(records)
    sel = quadrant_of(np.array([r.selected_snapshot().azimuth for r in recs]) - boresight_offset)
    oth = quadrant_of(np.array([s.azimuth for r in recs for s in r.others()]) - boresight_offset)
    sel_counts = np.bincount(sel, minlength=4) / len(sel)
    oth_counts = np.bincount(oth, minlength=4) / max(len(oth), 1)
    avail = {q: float(oth_counts[i]) for i, q in enumerate(QUADRANTS)}
    chosen = {q: float(sel_counts[i]) for i, q in enumerate(QUADRANTS)}
    return AzimuthReport(avail, chosen, avail["NE"] + avail["NW"], chosen["NE"] + chosen["NW"])


def spearman(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 2:
        return math.nan
    rx, _ = _midranks(x)
    ry, _ = _midranks(y)
    rx -= rx.mean()
    ry -= ry.mean()
    den = math.sqrt(float(np.dot(rx, rx)) * float(np.dot(ry, ry)))
    return float(np.dot(rx, ry)) / den if den > 0 else math.nan


@dataclass
class LaunchBinReport:
    bins: list  # (year, month, picked, available, probability)
    spearman: float
    unresolved: list = field(default_factory=list)


def launch_bin_report(records: Sequence[SlotRecord], launches: Mapping[int, date]) -> LaunchBinReport:
    """Per launch month: slots picked from the bin / slots the bin was available.

    Satellites missing from the catalog are flagged and excluded; a slot
    whose selected satellite is unresolved is excluded entirely.
    """
    recs = _selected(records)
    picked: dict[tuple[int, int], int] = {}
    avail: dict[tuple[int, int], int] = {}
    unresolved: set[int] = set()
    for r in recs:
        if r.selected not in launches:
            unresolved.add(r.selected)
            continue
        bins = set()
        for s in r.available:
            d = launches.get(s.norad_id)
            if d is None:
                unresolved.add(s.norad_id)
                continue
            bins.add((d.year, d.month))
        for b in bins:
            avail[b] = avail.get(b, 0) + 1
        d = launches[r.selected]
        picked[(d.year, d.month)] = picked.get((d.year, d.month), 0) + 1
    if unresolved:
        log.warning("launch_bin_report: %d satellites without launch dates excluded", len(unresolved))
    rows = []
    for b in sorted(avail):
        k = picked.get(b, 0)
        rows.append((b[0], b[1], k, avail[b], k / avail[b]))
    rho = spearman([y * 12 + m for y, m, *_ in rows], [p for *_, p in rows]) if len(rows) >= 2 else math.nan
    return LaunchBinReport(rows, rho, sorted(unresolved))


@dataclass
class SunlitReport:
    mixed_slots: int
    sunlit_pick_rate: float
    sunlit_available_share: float  # mean per-slot sunlit fraction over mixed slots
    dark_picks: int
    dark_pick_dark_share_threshold: float
    dark_pick_elevation_gap: float


def sunlit_report(records: Sequence[SlotRecord]) -> SunlitReport:
    """Sunlit preference over slots offering both sunlit and dark satellites."""
    recs = _selected(records)
    mixed = [r for r in recs if len({s.sunlit for s in r.available}) == 2]
    if not mixed:
        raise AnalyticsError("no mixed sunlit/dark slots")
    picks_lit = 0
    lit_share = 0.0
    dark_shares = []
    dark_el = []
    lit_el = []
    for r in mixed:
        lit = [s for s in r.available if s.sunlit]
        lit_share += len(lit) / len(r.available)
        chosen = r.selected_snapshot()
        if chosen.sunlit:
            picks_lit += 1
        else:
            dark_shares.append(1.0 - len(lit) / len(r.available))
            dark_el.append(chosen.elevation)
            lit_el.extend(s.elevation for s in lit)
    n = len(mixed)
    return SunlitReport(
        mixed_slots=n,
        sunlit_pick_rate=picks_lit / n,
        sunlit_available_share=lit_share / n,
        dark_picks=len(dark_el),
        dark_pick_dark_share_threshold=min(dark_shares) if dark_shares else math.nan,
        dark_pick_elevation_gap=(float(np.mean(dark_el)) - float(np.mean(lit_el))) if dark_el else math.nan,
    )


@dataclass
class AnalyticsSummary:
    elevation: ElevationReport
    azimuth: AzimuthReport
    sunlit: SunlitReport | None
    launch: LaunchBinReport | None

    def headline(self) -> dict:
        return {
            "median_elevation_gap_deg": self.elevation.median_gap,
            "high_band_available": self.elevation.high_band_available,
            "high_band_selected": self.elevation.high_band_selected,
            "north_available": self.azimuth.north_available,
            "north_selected": self.azimuth.north_selected,
            "sunlit_pick_rate": self.sunlit.sunlit_pick_rate if self.sunlit else math.nan,
            "sunlit_available_share": self.sunlit.sunlit_available_share if self.sunlit else math.nan,
            "dark_pick_dark_share_threshold": self.sunlit.dark_pick_dark_share_threshold if self.sunlit else math.nan,
            "dark_pick_elevation_gap_deg": self.sunlit.dark_pick_elevation_gap if self.sunlit else math.nan,
            "launch_bin_spearman": self.launch.spearman if self.launch else math.nan,
        }


def analyze(records: Sequence[SlotRecord], launches: Mapping[int, date] | None = None, boresight_offset: float = 0.0):
    try:
        sun = sunlit_report(records)
    except AnalyticsError:
        sun = None
    return AnalyticsSummary(
        elevation_report(records),
        azimuth_report(records, boresight_offset),
        sun,
        launch_bin_report(records, launches) if launches is not None else None,
    )


def _csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerows(rows)
    return buf.getvalue()


def _fmt(v: float) -> str:
    return "nan" if v is None or (isinstance(v, float) and math.isnan(v)) else f"{v:.6f}"


def summary_csv(summary: AnalyticsSummary) -> str:
    return _csv([["metric", "value"]] + [[k, _fmt(v)] for k, v in summary.headline().items()])


def azimuth_csv(rep: AzimuthReport) -> str:
    rows = [["quadrant", "available_share", "selected_share"]]
    rows += [[q, _fmt(rep.available[q]), _fmt(rep.selected[q])] for q in QUADRANTS]
    return _csv(rows)


def launch_csv(rep: LaunchBinReport) -> str:
    rows = [["year", "month", "picked_slots", "available_slots", "probability"]]
    rows += [[y, m, k, n, _fmt(p)] for y, m, k, n, p in rep.bins]
    return _csv(rows)


def elevation_cdf_csv(rep: ElevationReport) -> str:
    rows = [["series", "elevation_deg", "cdf"]]
    for name, (x, y) in (("selected", rep.cdf_selected), ("available", rep.cdf_available)):
        rows += [[name, f"{a:.4f}", f"{b:.6f}"] for a, b in zip(x, y)]
    return _csv(rows)


def elevation_cdf_svg(rep: ElevationReport) -> str:
    plot = Plot("Elevation of selected vs available satellites", "elevation (deg)", "CDF")
    plot.add(*rep.cdf_available, "available", kind="step", dashed=True, color="#555555")
    plot.add(*rep.cdf_selected, "selected", kind="step", color="#d62728")
    return plot.render()


def launch_svg(rep: LaunchBinReport) -> str:
    plot = Plot("Pick probability by launch month", "launch month index", "pick probability")
    x = [y * 12 + (m - 1) for y, m, *_ in rep.bins]
    plot.add(np.array(x) / 12.0, [p for *_, p in rep.bins], "bins", kind="scatter")
    return plot.render()
