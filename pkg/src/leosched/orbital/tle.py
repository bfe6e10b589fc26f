"""Two-line element set parsing and formatting."""

from __future__ import annotations

import calendar
import re
from dataclasses import dataclass
from datetime import datetime, timedelta

from ..timeutil import UTC

_DESIGNATOR_RE = re.compile(r"^(\d{2})(\d{3})([A-Z]{0,3})$")


class TleFormatError(ValueError):
    pass


@dataclass(frozen=True)
class TleError:
    """A record that could not be parsed; ``line`` is 1-based."""

    line: int
    message: str

    def __str__(self) -> str:
        return f"line {self.line}: {self.message}"


@dataclass(frozen=True)
class TleRecord:
    norad_id: int
    intl_designator: str
    epoch: datetime
    mean_motion: float  # rev/day
    eccentricity: float
    inclination: float  # degrees
    raan: float
    arg_perigee: float
    mean_anomaly: float
    bstar: float  # 1/earth radii
    line1: str
    line2: str
    name: str = ""
    epoch_unix: float = 0.0

    @property
    def launch_year(self) -> int | None:
        m = _DESIGNATOR_RE.match(self.intl_designator.strip())
        if not m:
            return None
        yy = int(m.group(1))
        return 1900 + yy if yy >= 57 else 2000 + yy


def checksum(line: str) -> int:
    """Mod-10 checksum over the first 68 columns (digits count, '-' counts 1)."""
    total = 0
    for ch in line[:68]:
        if ch.isdigit():
            total += int(ch)
        elif ch == "-":
            total += 1
    return total % 10


def _implied_exp(field: str) -> float:
    """Decode the ``+NNNNN-E`` form with an implied leading decimal point."""
    s = field.strip()
    if not s:
        return 0.0
    sign = -1.0 if s[0] == "-" else 1.0
    if s[0] in "+-":
        s = s[1:]
    if len(s) < 2 or s[-2] not in "+-":
        raise TleFormatError(f"bad exponent field {field!r}")
    mantissa, exp = s[:-2], s[-2:]
    return sign * float("0." + mantissa.strip()) * 10.0 ** int(exp)


def _epoch(year2: int, day: float) -> tuple[datetime, float]:
    year = 1900 + year2 if year2 >= 57 else 2000 + year2
    start = calendar.timegm((year, 1, 1, 0, 0, 0))
    unix = start + (day - 1.0) * 86400.0
    dt = datetime(year, 1, 1, tzinfo=UTC) + timedelta(days=day - 1.0)
    return dt, unix


def parse_pair(line1: str, line2: str, name: str = "", lineno: int = 1) -> TleRecord:
    """Parse one element set; raises TleFormatError naming the offending line."""
    line1 = line1.rstrip()
    line2 = line2.rstrip()
    for offset, (line, tag) in enumerate(((line1, "1"), (line2, "2"))):
        n = lineno + offset
        if len(line) < 69:
            raise TleFormatError(f"line {n}: truncated ({len(line)} < 69 chars)")
        if line[0] != tag:
            raise TleFormatError(f"line {n}: expected line number {tag}")
        if not line[68].isdigit():
            raise TleFormatError(f"line {n}: checksum column is not a digit")
        if checksum(line) != int(line[68]):
            raise TleFormatError(
                f"line {n}: checksum mismatch (expected {checksum(line)}, found {line[68]})"
            )
    try:
        sat1 = int(line1[2:7])
        sat2 = int(line2[2:7])
        if sat1 != sat2:
            raise TleFormatError(f"line {lineno + 1}: catalog number {sat2} != {sat1}")
        epoch, epoch_unix = _epoch(int(line1[18:20]), float(line1[20:32]))
        bstar = _implied_exp(line1[53:61])
        inclination = float(line2[8:16])
        raan = float(line2[17:25])
        ecc = float("0." + line2[26:33].strip())
        argp = float(line2[34:42])
        ma = float(line2[43:51])
        mm = float(line2[52:63])
    except ValueError as exc:
        if isinstance(exc, TleFormatError):
            raise
        raise TleFormatError(f"line {lineno}: malformed field ({exc})") from None
    if not 0.0 <= ecc < 1.0:
        raise TleFormatError(f"line {lineno + 1}: eccentricity {ecc} out of range")
    if mm <= 0.0:
        raise TleFormatError(f"line {lineno + 1}: mean motion must be positive")
    return TleRecord(
        norad_id=sat1,
        intl_designator=line1[9:17].strip(),
        epoch=epoch,
        mean_motion=mm,
        eccentricity=ecc,
        inclination=inclination,
        raan=raan,
        arg_perigee=argp,
        mean_anomaly=ma,
        bstar=bstar,
        line1=line1,
        line2=line2,
        name=name.strip(),
        epoch_unix=epoch_unix,
    )


def parse_tle_catalog(text: str) -> tuple[list[TleRecord], list[TleError]]:
    """Parse 2-line or name-prefixed 3-line element sets.

    Returns the valid records in file order and one TleError per rejected
    record. Nothing is dropped silently.
    """
    records: list[TleRecord] = []
    errors: list[TleError] = []
    lines = text.splitlines()
    i = 0
    name = ""
    name_line = 0
    while i < len(lines):
        raw = lines[i]
        if not raw.strip():
            i += 1
            continue
        if raw.startswith("1 ") and len(raw.strip()) > 2:
            if i + 1 >= len(lines) or not lines[i + 1].startswith("2 "):
                errors.append(TleError(i + 1, "truncated pair: line 2 missing"))
                i += 1
                name = ""
                continue
            try:
                records.append(parse_pair(raw, lines[i + 1], name, lineno=i + 1))
            except TleFormatError as exc:
                msg = str(exc)
                m = re.match(r"line (\d+): (.*)", msg)
                if m:
                    errors.append(TleError(int(m.group(1)), m.group(2)))
                else:
                    errors.append(TleError(i + 1, msg))
            name = ""
            i += 2
            continue
        if raw.startswith("2 "):
            errors.append(TleError(i + 1, "truncated pair: line 1 missing"))
            name = ""
            i += 1
            continue
        if name:
            errors.append(TleError(name_line, "name line without element set"))
        name = raw[2:] if raw.startswith("0 ") else raw
        name_line = i + 1
        i += 1
    if name:
        errors.append(TleError(name_line, "name line without element set"))
    return records, errors


def _format_exp(value: float) -> str:
    """Encode a float into the 8-column implied-decimal exponent form."""
    if value == 0.0:
        return " 00000-0"
    sign = "-" if value < 0 else " "
    v = abs(value)
    exp = 0
    while v >= 1.0:
        v /= 10.0
        exp += 1
    while v < 0.1:
        v *= 10.0
        exp -= 1
    mantissa = int(round(v * 1e5))
    if mantissa >= 100000:
        mantissa //= 10
        exp += 1
    if not -9 <= exp <= 9:
        raise TleFormatError(f"value {value} not representable")
    return f"{sign}{mantissa:05d}{'-' if exp < 0 else '+'}{abs(exp)}"


def _with_checksum(body: str) -> str:
    body = body.ljust(68)[:68]
    return body + str(checksum(body))


def format_tle(
    norad_id: int,
    intl_designator: str,
    epoch: datetime,
    mean_motion: float,
    eccentricity: float,
    inclination: float,
    raan: float,
    arg_perigee: float,
    mean_anomaly: float,
    bstar: float = 0.0,
    elset: int = 999,
    rev: int = 0,
) -> tuple[str, str]:
    """Build a checksummed TLE line pair."""
    epoch = epoch.astimezone(UTC)
    start = datetime(epoch.year, 1, 1, tzinfo=UTC)
    day = 1.0 + (epoch - start).total_seconds() / 86400.0
    line1 = (
        f"1 {norad_id:05d}U {intl_designator:<8s} {epoch.year % 100:02d}{day:012.8f} "
        f" .00000000  00000-0 {_format_exp(bstar)} 0 {elset:4d}"
    )
    ecc = f"{eccentricity:.7f}"[2:]
    line2 = (
        f"2 {norad_id:05d} {inclination % 360.0:8.4f} {raan % 360.0:8.4f} {ecc} "
        f"{arg_perigee % 360.0:8.4f} {mean_anomaly % 360.0:8.4f} {mean_motion:11.8f}{rev % 100000:5d}"
    )
    return _with_checksum(line1), _with_checksum(line2)
