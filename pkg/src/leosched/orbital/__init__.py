"""TLE catalogs, SGP4 propagation and observer-relative geometry."""

from .frames import ObserverLocation, Topocentric, look_angles, position_from_look_angles
from .launches import LaunchBin, launch_bin, read_launch_catalog, satellite_age, write_launch_catalog
from .sgp4 import PropagationError, Sgp4Batch
from .tle import TleError, TleFormatError, TleRecord, format_tle, parse_tle_catalog
from .visibility import (
    Constellation,
    SatelliteSnapshot,
    SatelliteState,
    StaleElementsError,
    is_sunlit,
    propagate,
    visible_satellites,
)

__all__ = [
    "Constellation",
    "LaunchBin",
    "ObserverLocation",
    "PropagationError",
    "SatelliteSnapshot",
    "SatelliteState",
    "Sgp4Batch",
    "StaleElementsError",
    "TleError",
    "TleFormatError",
    "TleRecord",
    "Topocentric",
    "format_tle",
    "is_sunlit",
    "launch_bin",
    "look_angles",
    "parse_tle_catalog",
    "position_from_look_angles",
    "propagate",
    "read_launch_catalog",
    "satellite_age",
    "visible_satellites",
    "write_launch_catalog",
]
