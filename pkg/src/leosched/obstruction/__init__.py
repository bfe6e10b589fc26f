"""Obstruction-map decoding: geometry, XOR differencing, trail extraction."""

from .geometry import (
    DEFAULT_GEOMETRY,
    MAP_SIZE,
    GeometryError,
    MapGeometry,
    disk_mask,
    disk_pixels,
    pixel_to_polar,
    polar_to_pixel,
)
from .maps import (
    MapError,
    ObstructionMap,
    decode_pgm,
    encode_pgm,
    map_filename,
    parse_map_filename,
    read_map,
    write_map,
    xor_maps,
)
from .track import AmbiguousDiff, DecodeError, EmptyDiff, PolarTrack, chain_pixels, extract_track

__all__ = [
    "DEFAULT_GEOMETRY",
    "MAP_SIZE",
    "AmbiguousDiff",
    "DecodeError",
    "EmptyDiff",
    "GeometryError",
    "MapError",
    "MapGeometry",
    "ObstructionMap",
    "PolarTrack",
    "chain_pixels",
    "decode_pgm",
    "disk_mask",
    "disk_pixels",
    "encode_pgm",
    "extract_track",
    "map_filename",
    "parse_map_filename",
    "pixel_to_polar",
    "polar_to_pixel",
    "read_map",
    "write_map",
    "xor_maps",
]
