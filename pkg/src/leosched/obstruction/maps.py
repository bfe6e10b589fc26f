"""Obstruction-map container, XOR differencing and PGM file I/O."""

from __future__ import annotations

import os
import re
import tempfile
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path

import numpy as np

from ..timeutil import from_unix, to_unix
from .geometry import DEFAULT_GEOMETRY, MAP_SIZE, RIM_TOLERANCE_PX, MapGeometry, disk_mask

PGM_THRESHOLD = 128
_FILENAME_RE = re.compile(r"^(?P<terminal>.+)_(?P<slot>\d+)_(?P<unix>\d+)\.pgm$")


class MapError(ValueError):
    pass


@dataclass
class ObstructionMap:
    pixels: np.ndarray  # bool, indexed [row, col]
    captured_at: datetime
    slot_index: int
    terminal_id: str = ""
    geometry: MapGeometry = field(default=DEFAULT_GEOMETRY, repr=False)

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=bool)
        if self.pixels.shape != (MAP_SIZE, MAP_SIZE):
            raise MapError(f"map must be {MAP_SIZE}x{MAP_SIZE}, got {self.pixels.shape}")

    @classmethod
    def blank(cls, captured_at: datetime, slot_index: int = 0, terminal_id: str = "") -> "ObstructionMap":
        return cls(np.zeros((MAP_SIZE, MAP_SIZE), dtype=bool), captured_at, slot_index, terminal_id)

    def copy(self) -> "ObstructionMap":
        return ObstructionMap(self.pixels.copy(), self.captured_at, self.slot_index, self.terminal_id, self.geometry)

    def outside_disk(self) -> int:
        """Number of lit pixels outside the polar disk (0 for a valid map)."""
        return int(np.count_nonzero(self.pixels & ~disk_mask(self.geometry, RIM_TOLERANCE_PX)))

    def validate(self) -> None:
        n = self.outside_disk()
        if n:
            raise MapError(f"{n} lit pixels outside the polar disk")

    @property
    def lit_count(self) -> int:
        return int(np.count_nonzero(self.pixels))


def xor_maps(a: ObstructionMap, b: ObstructionMap) -> ObstructionMap:
    """Pixels that changed between consecutive slots ``a`` and ``b``."""
    if a.pixels.shape != b.pixels.shape:
        raise MapError("dimension mismatch")
    if a.terminal_id and b.terminal_id and a.terminal_id != b.terminal_id:
        raise MapError(f"maps from different terminals: {a.terminal_id} vs {b.terminal_id}")
    if b.slot_index != a.slot_index + 1:
        raise MapError(f"slots not consecutive: {a.slot_index} -> {b.slot_index}")
    return ObstructionMap(a.pixels ^ b.pixels, b.captured_at, b.slot_index, b.terminal_id or a.terminal_id, b.geometry)


# ---------------------------------------------------------------- PGM codec


def _tokens(data: bytes, start: int, count: int) -> tuple[list[bytes], int]:
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    out = []
    i = start
    n = len(data)
    while len(out) < count:
        while i < n and data[i : i + 1].isspace():
            i += 1
        if i < n and data[i : i + 1] == b"#":
            while i < n and data[i : i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        j = i
        while j < n and not data[j : j + 1].isspace() and data[j : j + 1] != b"#":
            j += 1
        if j == i:
            raise MapError("truncated PGM header")
        out.append(data[i:j])
        i = j
    return out, i


def decode_pgm(data: bytes) -> tuple[np.ndarray, int]:
    """Decode P2/P5 bytes into a (row, col) array and its maxval."""
    if len(data) < 2 or data[:1] != b"P" or data[1:2] not in (b"2", b"5"):
        raise MapError("not a P2/P5 PGM file")
    magic = data[:2]
    (w, h, maxval), pos = _tokens(data, 2, 3)
    try:
        width, height, maxv = int(w), int(h), int(maxval)
    except ValueError:
        raise MapError("malformed PGM header") from None
    if not 0 < maxv < 65536:
        raise MapError(f"bad maxval {maxv}")
    dtype = np.uint8 if maxv < 256 else np.dtype(">u2")
    if magic == b"P5":
        pos += 1  # single whitespace byte after maxval
        nbytes = width * height * (1 if maxv < 256 else 2)
        raw = data[pos : pos + nbytes]
        if len(raw) != nbytes:
            raise MapError("truncated PGM raster")
        arr = np.frombuffer(raw, dtype=dtype).reshape(height, width)
    else:
        vals, _ = _tokens(data, pos, width * height)
        arr = np.array([int(v) for v in vals], dtype=np.int64).reshape(height, width)
    return arr.astype(np.uint16 if maxv >= 256 else np.uint8), maxv


def encode_pgm(arr: np.ndarray, binary: bool = True, maxval: int = 255) -> bytes:
    arr = np.asarray(arr)
    h, w = arr.shape
    if binary:
        header = f"P5\n{w} {h}\n{maxval}\n".encode()
        body = arr.astype(np.uint8 if maxval < 256 else ">u2").tobytes()
        return header + body
    lines = [f"P2\n{w} {h}\n{maxval}"]
    for row in arr:
        lines.append(" ".join(str(int(v)) for v in row))
    return ("\n".join(lines) + "\n").encode()


def map_filename(terminal_id: str, slot_index: int, captured_at) -> str:
    return f"{terminal_id}_{slot_index}_{int(round(to_unix(captured_at)))}.pgm"


def parse_map_filename(name: str) -> tuple[str, int, int]:
    m = _FILENAME_RE.match(Path(name).name)
    if not m:
        raise MapError(f"filename {name!r} does not match <terminal>_<slot>_<unix>.pgm")
    return m.group("terminal"), int(m.group("slot")), int(m.group("unix"))


def atomic_write_bytes(path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_map(m: ObstructionMap, directory, binary: bool = True) -> Path:
    path = Path(directory) / map_filename(m.terminal_id, m.slot_index, m.captured_at)
    atomic_write_bytes(path, encode_pgm(np.where(m.pixels, 255, 0).astype(np.uint8), binary=binary))
    return path


def read_map(path, geometry: MapGeometry = DEFAULT_GEOMETRY) -> ObstructionMap:
    path = Path(path)
    terminal, slot, unix = parse_map_filename(path.name)
    arr, maxval = decode_pgm(path.read_bytes())
    if arr.shape != (MAP_SIZE, MAP_SIZE):
        raise MapError(f"{path.name}: expected {MAP_SIZE}x{MAP_SIZE}, got {arr.shape[1]}x{arr.shape[0]}")
    # threshold scaled from the 0-255 convention
    lit = arr.astype(np.int64) * 255 >= PGM_THRESHOLD * maxval
    return ObstructionMap(lit, from_unix(unix), slot, terminal, geometry)
