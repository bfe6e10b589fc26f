"""Slot-by-slot simulation: availability, scheduling, rendering and output."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from ..obstruction.geometry import DEFAULT_GEOMETRY, MapGeometry
from ..obstruction.maps import ObstructionMap, atomic_write_bytes, write_map
from ..obstruction.track import MIN_COMPONENT_PX
from ..orbital.frames import ObserverLocation, Topocentric
from ..orbital.launches import write_launch_catalog
from ..orbital.visibility import Constellation, SatelliteSnapshot
from ..records import SlotRecord, dumps_records
from ..timeutil import from_unix, to_unix
from .constellation import format_catalog, generate_constellation
from .render import RenderError, render_slot
from .scheduler import SchedulerConfig, schedule_slot

log = logging.getLogger(__name__)

SLOT_SECONDS = 15
MAP_RESET_S = 600
_CHUNK_SLOTS = 240


@dataclass(frozen=True)
class Terminal:
    terminal_id: str
    location: ObserverLocation
    tz_offset_minutes: int = 0


@dataclass
class GroundTruthSlot:
    record: SlotRecord
    map: ObstructionMap | None
    trail: list = field(default_factory=list)  # (col, row) pixels drawn this slot
    clean: bool = False  # decodable trail disjoint from the pixels already on the map
    fallback: bool = False
    slot_number: int = 0  # absolute slot count since the unix epoch


@dataclass
class CampaignStats:
    slots: int = 0
    empty_slots: int = 0
    fallback_slots: int = 0
    render_failures: int = 0
    clean_slots: int = 0


def first_slot_start(start_unix: float, offset_s: int) -> int:
    """Earliest slot boundary at or after ``start_unix``."""
    return int(math.ceil((start_unix - offset_s) / SLOT_SECONDS)) * SLOT_SECONDS + offset_s


def run_campaign(
    constellation: Constellation,
    terminals: Sequence[Terminal],
    start,
    duration_s: float,
    cfg: SchedulerConfig,
    geom: MapGeometry = DEFAULT_GEOMETRY,
    map_reset_s: int = MAP_RESET_S,
    render: bool = True,
    stats: CampaignStats | None = None,
) -> Iterator[GroundTruthSlot]:
    """Yield one GroundTruthSlot per terminal per 15-s slot, terminal by terminal.

    Maps accumulate trails and reset to blank every ``map_reset_s`` seconds
    of simulated time; ``slot_index`` counts slots since the last reset.
    """
    cfg.validate()
    stats = stats if stats is not None else CampaignStats()
    t0 = first_slot_start(to_unix(start), cfg.epoch_offset_s)
    n_slots = int((to_unix(start) + duration_s - t0) // SLOT_SECONDS)
    slots_per_map = max(1, int(map_reset_s // SLOT_SECONDS))
    for ti, term in enumerate(terminals):
        prior = None
        for c0 in range(0, n_slots, _CHUNK_SLOTS):
            times = t0 + SLOT_SECONDS * np.arange(c0, min(n_slots, c0 + _CHUNK_SLOTS))
            el, az, rng_km, lit, err = constellation.look(term.location, times)
            ok = (err == 0) & ~np.isnan(constellation.launch_unix)[:, None]
            for j, ts in enumerate(times):
                k = c0 + j
                slot_index = k % slots_per_map
                when = from_unix(float(ts))
                if slot_index == 0 or prior is None:
                    prior = ObstructionMap.blank(when, -1, term.terminal_id)
                vis = np.flatnonzero(ok[:, j] & (el[:, j] >= cfg.min_elevation))
                vis = vis[np.argsort(constellation.norad_ids[vis], kind="stable")]
                snaps = [
                    SatelliteSnapshot(
                        int(constellation.norad_ids[i]),
                        when,
                        Topocentric(float(el[i, j]), float(az[i, j]), float(rng_km[i, j])),
                        max(0.0, (float(ts) - constellation.launch_unix[i]) / 86400.0),
                        bool(lit[i, j]),
                    )
                    for i in vis
                ]
                slot_number = int((ts - cfg.epoch_offset_s) // SLOT_SECONDS)
                stats.slots += 1
                if not snaps:
                    stats.empty_slots += 1
                    m = prior.copy()
                    m.captured_at, m.slot_index = when, slot_index
                    prior = m
                    yield GroundTruthSlot(SlotRecord(term.terminal_id, when, [], None), m if render else None, slot_number=slot_number)
                    continue
                rng = np.random.default_rng([cfg.seed, ti, slot_number])
                decision = schedule_slot(snaps, cfg, rng)
                stats.fallback_slots += decision.fallback
                record = SlotRecord(term.terminal_id, when, snaps, decision.norad_id)
                m, trail, clean = None, [], False
                if render:
                    try:
                        m, trail = render_slot(
                            decision.norad_id, when, term.location, prior, constellation, geom, cfg.min_elevation, slot_index
                        )
                        # a trail of fewer than 3 px is below the decoder's noise floor
                        clean = len(trail) >= MIN_COMPONENT_PX and not any(prior.pixels[r, c] for c, r in trail)
                    except RenderError as exc:
                        stats.render_failures += 1
                        log.debug("%s", exc)
                        m = prior.copy()
                        m.captured_at, m.slot_index = when, slot_index
                    prior = m
                stats.clean_slots += clean
                yield GroundTruthSlot(record, m, trail, clean, decision.fallback, slot_number)


@dataclass
class CampaignSpec:
    """Everything needed to reproduce a campaign, as loaded from a config file."""

    start: object
    duration_s: float
    terminals: list
    scheduler: SchedulerConfig
    shells: list
    constellation_epoch: object
    constellation_seed: int = 0
    launch_months: int = 72
    map_reset_s: int = MAP_RESET_S
    write_maps: bool = True
    pgm_binary: bool = True


def build_constellation(spec: CampaignSpec):
    records, launches = generate_constellation(spec.shells, spec.constellation_epoch, spec.constellation_seed, spec.launch_months)
    return records, launches, Constellation(records, launches)


def simulate_to_dir(spec: CampaignSpec, out_dir) -> dict:
    """Run a campaign and write records, maps, TLEs and launch catalog under ``out_dir``.

    Returns a JSON-serializable summary (also written as summary.json).
    """
    out = Path(out_dir)
    records, launches, constellation = build_constellation(spec)
    stats = CampaignStats()
    slot_records = []
    truth_rows = ["terminal_id,slot_index,unix,norad_id,clean"]
    maps_dir = out / "maps"
    for g in run_campaign(
        constellation,
        spec.terminals,
        spec.start,
        spec.duration_s,
        spec.scheduler,
        map_reset_s=spec.map_reset_s,
        render=spec.write_maps,
        stats=stats,
    ):
        slot_records.append(g.record)
        if g.map is not None:
            write_map(g.map, maps_dir, binary=spec.pgm_binary)
            sel = "" if g.record.selected is None else str(g.record.selected)
            truth_rows.append(f"{g.record.terminal_id},{g.map.slot_index},{int(to_unix(g.record.slot_start))},{sel},{int(g.clean)}")
    atomic_write_bytes(out / "records.jsonl", dumps_records(slot_records).encode())
    atomic_write_bytes(out / "constellation.tle", format_catalog(records).encode())
    atomic_write_bytes(out / "launches.csv", write_launch_catalog(launches).encode())
    if spec.write_maps:
        atomic_write_bytes(out / "truth.csv", ("\n".join(truth_rows) + "\n").encode())
    summary = {
        "slots": stats.slots,
        "empty_slots": stats.empty_slots,
        "fallback_slots": stats.fallback_slots,
        "render_failures": stats.render_failures,
        "clean_slots": stats.clean_slots,
        "satellites": len(records),
    }
    atomic_write_bytes(out / "summary.json", (json.dumps(summary, indent=2, sort_keys=True) + "\n").encode())
    return summary
