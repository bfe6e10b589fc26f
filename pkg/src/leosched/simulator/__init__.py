"""Synthetic constellations, a preference-driven scheduler and ground-truth map rendering."""

from .campaign import (
    CampaignSpec,
    CampaignStats,
    GroundTruthSlot,
    Terminal,
    build_constellation,
    first_slot_start,
    run_campaign,
    simulate_to_dir,
)
from .config import PRESETS, campaign_from_mapping, load_campaign, preset
from .constellation import STARLINK_LIKE, Shell, ShellError, format_catalog, generate_constellation, mean_motion_rev_per_day
from .render import RenderError, line_pixels, render_slot, render_track, trail_pixels
from .scheduler import ConfigError, Decision, GeoExclusion, SchedulerConfig, schedule_slot, score_cohort

__all__ = [
    "PRESETS",
    "STARLINK_LIKE",
    "CampaignSpec",
    "CampaignStats",
    "ConfigError",
    "Decision",
    "GeoExclusion",
    "GroundTruthSlot",
    "RenderError",
    "SchedulerConfig",
    "Shell",
    "ShellError",
    "Terminal",
    "build_constellation",
    "campaign_from_mapping",
    "first_slot_start",
    "format_catalog",
    "generate_constellation",
    "line_pixels",
    "load_campaign",
    "mean_motion_rev_per_day",
    "preset",
    "render_slot",
    "render_track",
    "run_campaign",
    "schedule_slot",
    "score_cohort",
    "simulate_to_dir",
    "trail_pixels",
]
