from datetime import datetime, timezone

import pytest
from hypothesis import HealthCheck, settings

from leosched.orbital import Constellation, ObserverLocation
from leosched.simulator import Terminal, first_slot_start, generate_constellation, preset, run_campaign
from leosched.timeutil import to_unix

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

EPOCH = datetime(2025, 1, 15, tzinfo=timezone.utc)
ZURICH = ObserverLocation(47.4, 8.5, 400.0)


@pytest.fixture(scope="session")
def walker():
    """The default 1584-satellite shell: (records, launches, constellation)."""
    records, launches = generate_constellation(seed=0, epoch=EPOCH)
    return records, launches, Constellation(records, launches)


@pytest.fixture(scope="session")
def terminal():
    return Terminal("zrh", ZURICH, 60)


def campaign(constellation, terminal, name, n_slots, render=False, start=EPOCH, **overrides):
    """Exactly ``n_slots`` slots from the first slot boundary at or after ``start``."""
    cfg = preset(name, **overrides)
    lead = first_slot_start(to_unix(start), cfg.epoch_offset_s) - to_unix(start)
    return list(run_campaign(constellation, [terminal], start, lead + n_slots * 15, cfg, render=render))


@pytest.fixture(scope="session")
def short_campaign(walker, terminal):
    """One rendered hour under the paper-mimic preset."""
    return campaign(walker[2], terminal, "paper-mimic", 240, render=True)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
