"""RTT trace analysis: slot slicing, Mann-Whitney U, epoch offset and band detection."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from datetime import datetime

import numpy as np

from .svg import Plot
from .timeutil import from_unix, isoformat

SLOT_SECONDS = 15
SIGNIFICANCE = 0.05
CONCLUSIVE_SCORE = 0.25
DEFAULT_BAND_GAP_MS = 2.0
MIN_BAND_FRACTION = 0.10


class TraceError(ValueError):
    pass


@dataclass
class LatencyTrace:
    """Column-oriented trace: unix seconds, RTT in ms (NaN when lost), loss flags."""

    t: np.ndarray
    rtt: np.ndarray
    lost: np.ndarray

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.rtt = np.asarray(self.rtt, dtype=float)
        self.lost = np.asarray(self.lost, dtype=bool)
        if not (self.t.shape == self.rtt.shape == self.lost.shape):
            raise TraceError("trace columns differ in length")
        if np.any(np.diff(self.t) < 0):
            raise TraceError("trace timestamps are not time-ordered")
        ok = ~self.lost
        if np.any(~(self.rtt[ok] > 0)):
            raise TraceError("rtt must be > 0 for received packets")
        self.rtt = np.where(self.lost, np.nan, self.rtt)

    def __len__(self) -> int:
        return len(self.t)

    def shifted(self, seconds: float) -> "LatencyTrace":
        return LatencyTrace(self.t + seconds, self.rtt.copy(), self.lost.copy())


@dataclass
class SlotStats:
    slot_start: datetime
    n: int
    median: float
    p5: float
    p95: float
    loss_rate: float
    bands: list = field(default_factory=list)  # (center, width, fraction)


def slot_ids(t: np.ndarray, offset_s: int) -> np.ndarray:
    """Index of the half-open 15-s slot containing each timestamp."""
    return np.floor((np.asarray(t, dtype=float) - offset_s) / SLOT_SECONDS).astype(np.int64)


def _check_offset(offset_s) -> int:
    if not (0 <= int(offset_s) < SLOT_SECONDS) or int(offset_s) != offset_s:
        raise TraceError(f"offset must be an integer in [0, {SLOT_SECONDS}), got {offset_s}")
    return int(offset_s)


def _groups(trace: LatencyTrace, offset_s: int):
    ids = slot_ids(trace.t, offset_s)
    uniq, starts = np.unique(ids, return_index=True)
    bounds = list(starts) + [len(ids)]
    for k, sid in enumerate(uniq):
        yield int(sid), slice(bounds[k], bounds[k + 1])


def slice_slots(trace: LatencyTrace, offset_s: int, band_gap_ms: float = DEFAULT_BAND_GAP_MS) -> list[SlotStats]:
    """Partition a trace into slots starting ``offset_s`` seconds past each quarter minute."""
    offset_s = _check_offset(offset_s)
    if len(trace) == 0:
        raise TraceError("empty trace")
    out = []
    for sid, sl in _groups(trace, offset_s):
        rtt = trace.rtt[sl]
        lost = trace.lost[sl]
        good = rtt[~lost]
        n = len(rtt)
        if good.size:
            p5, med, p95 = np.percentile(good, [5, 50, 95])
            bands = detect_bands(good, band_gap_ms) if good.size >= 50 else []
        else:
            p5 = med = p95 = math.nan
            bands = []
        out.append(
            SlotStats(
                slot_start=from_unix(sid * SLOT_SECONDS + offset_s),
                n=n,
                median=float(med),
                p5=float(p5),
                p95=float(p95),
                loss_rate=float(lost.sum()) / n,
                bands=bands,
            )
        )
    return out


def _midranks(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Ranks (1-based, ties averaged) and the sizes of each tie group."""
    order = np.argsort(values, kind="mergesort")
    sv = values[order]
    edges = np.flatnonzero(np.diff(sv) != 0) + 1
    starts = np.concatenate([[0], edges])
    ends = np.concatenate([edges, [len(sv)]])
    sizes = ends - starts
    avg = (starts + ends + 1) / 2.0
    ranks = np.empty(len(sv))
    ranks[order] = np.repeat(avg, sizes)
    return ranks, sizes


def mann_whitney_u(x, y) -> tuple[float, float]:
    """U statistic for ``x`` and its two-sided p-value (normal approximation).

    Uses midranks for ties, the tie-corrected variance and a 0.5 continuity
    correction. When every value is identical the p-value is 1.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n, m = len(x), len(y)
    if n < 3 or m < 3:
        raise TraceError("Mann-Whitney U needs at least 3 samples per group")
    ranks, ties = _midranks(np.concatenate([x, y]))
    u = float(ranks[:n].sum() - n * (n + 1) / 2.0)
    big_n = n + m
    tie_term = float(np.sum(ties.astype(float) ** 3 - ties)) / (big_n * (big_n - 1))
    var = n * m / 12.0 * ((big_n + 1) - tie_term)
    if var <= 0:
        return u, 1.0
    z = max(abs(u - n * m / 2.0) - 0.5, 0.0) / math.sqrt(var)
    return u, math.erfc(z / math.sqrt(2.0))


def _complete_slots(trace: LatencyTrace, offset_s: int):
    """Received-RTT arrays of slots fully covered by the trace, keyed by slot id."""
    t0, t1 = trace.t[0], trace.t[-1]
    out = {}
    for sid, sl in _groups(trace, offset_s):
        start = sid * SLOT_SECONDS + offset_s
        if start < t0 or start + SLOT_SECONDS > t1:
            continue
        out[sid] = trace.rtt[sl][~trace.lost[sl]]
    return out


@dataclass
class OffsetResult:
    offset_s: int
    scores: list  # fraction of significant adjacent pairs, per offset
    strength: list  # mean |z| of adjacent pairs, per offset
    inconclusive: bool


def _pair_stats(slots: dict) -> tuple[float, float]:
    sig = 0
    total = 0
    zs = []
    for sid in sorted(slots):
        if sid + 1 not in slots:
            continue
        a, b = slots[sid], slots[sid + 1]
        if len(a) < 3 or len(b) < 3:
            continue
        u, p = mann_whitney_u(a, b)
        total += 1
        sig += p < SIGNIFICANCE
        zs.append(abs(u - len(a) * len(b) / 2.0) / (len(a) * len(b)))
    if total == 0:
        return 0.0, 0.0
    return sig / total, float(np.mean(zs))


def detect_offset(trace: LatencyTrace) -> OffsetResult:
    """Find the within-quarter-minute second at which latency regimes change.

    Each candidate offset is scored by the fraction of adjacent complete
    slots whose RTT distributions differ (Mann-Whitney p < 0.05). Strong
    shifts saturate the score for offsets next to the true one, so ties at
    the maximum are broken by the mean normalized effect size |U - nm/2|/nm,
    then by the lower offset.
    """
    if len(trace) == 0 or trace.t[-1] - trace.t[0] < 10 * SLOT_SECONDS:
        raise TraceError("detect_offset needs a trace spanning at least 10 slots")
    scores, strength = [], []
    for off in range(SLOT_SECONDS):
        s, e = _pair_stats(_complete_slots(trace, off))
        scores.append(s)
        strength.append(e)
    best = max(scores)
    tied = [o for o in range(SLOT_SECONDS) if scores[o] == best]
    offset = min(tied, key=lambda o: (-strength[o], o))
    return OffsetResult(offset, scores, strength, best < CONCLUSIVE_SCORE)


def gap_clusters(rtts, band_gap_ms: float = DEFAULT_BAND_GAP_MS) -> list[np.ndarray]:
    """Split sorted RTTs wherever consecutive values differ by more than the gap."""
    v = np.sort(np.asarray(rtts, dtype=float))
    if v.size == 0:
        return []
    cuts = np.flatnonzero(np.diff(v) > band_gap_ms) + 1
    return np.split(v, cuts)


def detect_bands(rtts, band_gap_ms: float = DEFAULT_BAND_GAP_MS) -> list[tuple[float, float, float]]:
    """Parallel latency bands within one slot as (center, width, fraction)."""
    clusters = gap_clusters(rtts, band_gap_ms)
    if not clusters:
        return []
    n = sum(len(c) for c in clusters)
    keep = [c for c in clusters if len(c) >= MIN_BAND_FRACTION * n]
    if not keep:
        keep = [max(clusters, key=len)]
    bands = []
    for c in keep:
        p5, med, p95 = np.percentile(c, [5, 50, 95])
        bands.append((float(med), float(p95 - p5), len(c) / n))
    return bands


def synthetic_trace(
    seed: int,
    offset_s: int = 12,
    duration_s: float = 600.0,
    cadence_s: float = 0.020,
    base_ms: float = 40.0,
    sigma_ms: float = 1.0,
    amplitude: float = 5.0,
    start_unix: float = 1_700_000_000.0,
    loss_rate: float = 0.0,
) -> LatencyTrace:
    """White-noise RTTs whose mean jumps at every slot boundary.

    Slot levels follow a +/- ``amplitude`` * sigma random walk so consecutive
    slots always differ by exactly one step. ``amplitude = 0`` gives a
    stationary trace.
    """
    rng = np.random.default_rng(seed)
    n = int(round(duration_s / cadence_s))
    t = start_unix + np.arange(n) * cadence_s
    t = np.round(t * 1000.0) / 1000.0
    ids = slot_ids(t, offset_s)
    uniq, inv = np.unique(ids, return_inverse=True)
    steps = rng.choice([-1.0, 1.0], size=len(uniq))
    level = np.cumsum(steps) * amplitude * sigma_ms
    level -= level.min()
    rtt = base_ms + level[inv] + rng.normal(0.0, sigma_ms, n)
    rtt = np.maximum(rtt, 0.1)
    lost = rng.random(n) < loss_rate
    return LatencyTrace(t, np.where(lost, np.nan, rtt), lost)


TRACE_HEADER = ["unix_ms", "rtt_ms", "lost"]


def parse_trace_csv(text: str) -> LatencyTrace:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [c.strip() for c in rows[0]] != TRACE_HEADER:
        raise TraceError(f"trace CSV must start with header {','.join(TRACE_HEADER)}")
    t, rtt, lost = [], [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 3:
            raise TraceError(f"line {lineno}: expected 3 fields")
        try:
            is_lost = row[2].strip() == "1"
            t.append(int(row[0]) / 1000.0)
            rtt.append(math.nan if is_lost else float(row[1]))
            lost.append(is_lost)
        except ValueError as exc:
            raise TraceError(f"line {lineno}: {exc}") from None
    return LatencyTrace(np.array(t), np.array(rtt), np.array(lost, dtype=bool))


def format_trace_csv(trace: LatencyTrace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    for t, r, lost in zip(trace.t, trace.rtt, trace.lost):
        w.writerow([int(round(t * 1000.0)), "" if lost else f"{r:.3f}", int(lost)])
    return buf.getvalue()


def format_slot_csv(stats: list[SlotStats]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["slot_start_iso", "n", "median_ms", "p5_ms", "p95_ms", "loss_rate", "n_bands", "bands"])
    for s in stats:
        bands = ";".join(f"{c:.3f}/{wd:.3f}/{fr:.4f}" for c, wd, fr in s.bands)
        w.writerow(
            [isoformat(s.slot_start), s.n, f"{s.median:.3f}", f"{s.p5:.3f}", f"{s.p95:.3f}", f"{s.loss_rate:.4f}", len(s.bands), bands]
        )
    return buf.getvalue()


def format_offset_csv(result: OffsetResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["offset_s", "score", "strength", "selected"])
    for o in range(SLOT_SECONDS):
        w.writerow([o, f"{result.scores[o]:.6f}", f"{result.strength[o]:.6f}", int(o == result.offset_s)])
    return buf.getvalue()


def strip_plot_svg(trace: LatencyTrace, offset_s: int, max_points: int = 20000) -> str:
    """RTT-versus-time scatter with slot boundaries drawn as vertical lines."""
    step = max(1, len(trace) // max_points)
    t0 = trace.t[0] if len(trace) else 0.0
    x = trace.t[::step] - t0
    plot = Plot("RTT trace", "seconds since trace start", "RTT (ms)")
    plot.add(x, trace.rtt[::step], "rtt", kind="scatter")
    if len(trace):
        first = (math.floor((t0 - offset_s) / SLOT_SECONDS) + 1) * SLOT_SECONDS + offset_s
        plot.vlines = list(np.arange(first, trace.t[-1], SLOT_SECONDS) - t0)
    return plot.render()
