"""Scheduler presets and campaign config files (JSON or TOML)."""

from __future__ import annotations

import json
import sys
from dataclasses import replace
from pathlib import Path

from ..orbital.frames import ObserverLocation
from ..timeutil import parse_iso
from .campaign import MAP_RESET_S, CampaignSpec, Terminal
from .constellation import STARLINK_LIKE, Shell, ShellError
from .scheduler import ConfigError, GeoExclusion, SchedulerConfig

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

# weights are (elevation, north, age, sunlit)
PRESETS: dict[str, SchedulerConfig] = {
    "uniform": SchedulerConfig(weights=(0.0, 0.0, 0.0, 0.0), noise_temperature=1.0),
    "max-elevation": SchedulerConfig(weights=(1.0, 0.0, 0.0, 0.0)),
    "north-only": SchedulerConfig(weights=(0.0, 1.0, 0.0, 0.0)),
    "newest-first": SchedulerConfig(weights=(0.0, 0.0, 1.0, 0.0)),
    "sunlit-first": SchedulerConfig(weights=(0.0, 0.0, 0.0, 1.0)),
    "paper-mimic": SchedulerConfig(
        weights=(1.0, 0.25, 0.1, 0.65),
        noise_temperature=0.23,
        geo_exclusion=GeoExclusion(azimuth=(150.0, 210.0), elevation=(25.0, 45.0)),
    ),
}


def preset(name: str, **overrides) -> SchedulerConfig:
    if name not in PRESETS:
        raise ConfigError([f"unknown preset {name!r} (have {', '.join(sorted(PRESETS))})"])
    return replace(PRESETS[name], **overrides)


def _load_mapping(path) -> dict:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".toml":
        return tomllib.loads(text)
    return json.loads(text)


def _location(value, problems: list[str], where: str):
    try:
        if isinstance(value, str):
            return ObserverLocation.parse(value)
        vals = [float(v) for v in value]
        return ObserverLocation(*vals)
    except (TypeError, ValueError) as exc:
        problems.append(f"{where}: invalid location ({exc})")
        return None


def _scheduler(section: dict, problems: list[str]) -> SchedulerConfig | None:
    base_name = section.get("preset", "max-elevation")
    if base_name not in PRESETS:
        problems.append(f"scheduler.preset: unknown preset {base_name!r}")
        return None
    kwargs = {}
    if "weights" in section:
        try:
            kwargs["weights"] = tuple(float(w) for w in section["weights"])
        except (TypeError, ValueError):
            problems.append("scheduler.weights: expected 4 numbers")
    for key, cast in (("epoch_offset_s", int), ("min_elevation", float), ("noise_temperature", float), ("seed", int)):
        if key in section:
            try:
                kwargs[key] = cast(section[key])
            except (TypeError, ValueError):
                problems.append(f"scheduler.{key}: expected a number")
    if "geo_exclusion" in section:
        g = section["geo_exclusion"]
        if g is None or g is False:
            kwargs["geo_exclusion"] = None
        else:
            try:
                kwargs["geo_exclusion"] = GeoExclusion(
                    tuple(float(v) for v in g["azimuth"]), tuple(float(v) for v in g["elevation"])
                )
            except (KeyError, TypeError, ValueError):
                problems.append("scheduler.geo_exclusion: expected {azimuth=[lo,hi], elevation=[lo,hi]}")
    unknown = set(section) - {"preset", "weights", "epoch_offset_s", "min_elevation", "noise_temperature", "seed", "geo_exclusion"}
    problems.extend(f"scheduler.{k}: unknown key" for k in sorted(unknown))
    cfg = replace(PRESETS[base_name], **kwargs)
    problems.extend(f"scheduler: {p}" for p in cfg.problems())
    return cfg


def campaign_from_mapping(data: dict) -> CampaignSpec:
    """Build a CampaignSpec, collecting every validation problem before raising."""
    problems: list[str] = []
    camp = data.get("campaign", {})
    const = data.get("constellation", {})
    start = duration = None
    try:
        start = parse_iso(str(camp["start"]))
    except KeyError:
        problems.append("campaign.start: required")
    except ValueError as exc:
        problems.append(f"campaign.start: {exc}")
    try:
        duration = float(camp["duration_s"])
        if duration <= 0:
            problems.append("campaign.duration_s: must be > 0")
    except KeyError:
        problems.append("campaign.duration_s: required")
    except (TypeError, ValueError):
        problems.append("campaign.duration_s: expected a number")

    terminals = []
    raw_terms = data.get("terminals", [])
    if not raw_terms:
        problems.append("terminals: at least one terminal required")
    seen = set()
    for i, t in enumerate(raw_terms):
        tid = str(t.get("id", f"t{i}"))
        if tid in seen:
            problems.append(f"terminals[{i}].id: duplicate id {tid!r}")
        seen.add(tid)
        loc = _location(t.get("location"), problems, f"terminals[{i}]")
        if loc is not None:
            terminals.append(Terminal(tid, loc, int(t.get("tz_offset_minutes", 0))))

    sched = _scheduler(data.get("scheduler", {}), problems)

    shells = []
    for i, s in enumerate(const.get("shells", [list(vars(x).values()) for x in STARLINK_LIKE])):
        try:
            sh = Shell(int(s[0]), int(s[1]), float(s[2]), float(s[3]), int(s[4]) if len(s) > 4 else 1)
            sh.validate()
            shells.append(sh)
        except (TypeError, ValueError, IndexError, ShellError) as exc:
            problems.append(f"constellation.shells[{i}]: {exc}")
    epoch = start
    if "epoch" in const:
        try:
            epoch = parse_iso(str(const["epoch"]))
        except ValueError as exc:
            problems.append(f"constellation.epoch: {exc}")
    if problems:
        raise ConfigError(problems)
    return CampaignSpec(
        start=start,
        duration_s=duration,
        terminals=terminals,
        scheduler=sched,
        shells=shells,
        constellation_epoch=epoch,
        constellation_seed=int(const.get("seed", 0)),
        launch_months=int(const.get("launch_months", 72)),
        map_reset_s=int(camp.get("map_reset_s", MAP_RESET_S)),
        write_maps=bool(camp.get("write_maps", True)),
        pgm_binary=bool(camp.get("pgm_binary", True)),
    )


def load_campaign(path) -> CampaignSpec:
    return campaign_from_mapping(_load_mapping(path))
