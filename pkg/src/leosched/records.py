"""SlotRecord: one scheduling slot's availability and selection, with JSON-lines I/O."""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Iterable

from .orbital.frames import Topocentric
from .orbital.visibility import SatelliteSnapshot
from .timeutil import isoformat, parse_iso


class RecordError(ValueError):
    pass


@dataclass
class SlotRecord:
    terminal_id: str
    slot_start: datetime
    available: list  # SatelliteSnapshot, sorted by norad_id
    selected: int | None

    def validate(self) -> None:
        if self.selected is None:
            return
        if not self.available:
            raise RecordError(f"{self.terminal_id} {isoformat(self.slot_start)}: empty availability")
        if self.selected not in {s.norad_id for s in self.available}:
            raise RecordError(f"{self.terminal_id} {isoformat(self.slot_start)}: selected {self.selected} not available")
        if any(s.t != self.slot_start for s in self.available):
            raise RecordError(f"{self.terminal_id} {isoformat(self.slot_start)}: snapshot time differs from slot start")

    @property
    def has_selection(self) -> bool:
        return self.selected is not None

    def selected_snapshot(self) -> SatelliteSnapshot:
        for s in self.available:
            if s.norad_id == self.selected:
                return s
        raise RecordError(f"selected {self.selected} not available")

    def others(self) -> list[SatelliteSnapshot]:
        return [s for s in self.available if s.norad_id != self.selected]

    def to_json(self) -> dict:
        return {
            "terminal_id": self.terminal_id,
            "slot_start": isoformat(self.slot_start),
            "selected": self.selected,
            "available": [
                {
                    "norad_id": s.norad_id,
                    "elevation": s.topo.elevation,
                    "azimuth": s.topo.azimuth,
                    "range_km": s.topo.range,
                    "age_days": s.age,
                    "sunlit": s.sunlit,
                }
                for s in self.available
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SlotRecord":
        t = parse_iso(obj["slot_start"])
        avail = [
            SatelliteSnapshot(
                int(a["norad_id"]),
                t,
                Topocentric(float(a["elevation"]), float(a["azimuth"]), float(a.get("range_km", 0.0))),
                float(a["age_days"]),
                bool(a["sunlit"]),
            )
            for a in obj["available"]
        ]
        sel = obj.get("selected")
        return cls(str(obj["terminal_id"]), t, avail, None if sel is None else int(sel))


def dumps_records(records: Iterable[SlotRecord]) -> str:
    return "".join(json.dumps(r.to_json(), sort_keys=True) + "\n" for r in records)


def loads_records(text: str, validate: bool = True) -> list[SlotRecord]:
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = SlotRecord.from_json(json.loads(line))
            if validate:
                rec.validate()
        except (KeyError, TypeError, ValueError) as exc:
            raise RecordError(f"line {lineno}: {exc}") from None
        out.append(rec)
    return out


def read_records(path) -> list[SlotRecord]:
    return loads_records(Path(path).read_text(encoding="utf-8"))
