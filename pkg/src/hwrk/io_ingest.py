"""Ingestion of daily temperature records and fault logs.

Both formats are UTF-8 CSV with a header row. Blank lines and lines starting
with ``#`` are skipped; line numbers in error messages refer to the physical
line in the file.

Temperature CSV::

    date,t_min,t_avg,t_max
    2017-05-25,18.0,26.0,33.0

``t_avg`` may be empty (or the column absent); it is then imputed as the
midpoint of ``t_min`` and ``t_max`` and the record is flagged.

Fault CSV::

    timestamp,component_id,feeder_id
    2017-05-25T02:00:00+02:00,J-114,F7

Timestamps without an offset are interpreted in the caller-supplied zone and
stored as UTC instants.
"""

from __future__ import annotations

import csv
import datetime as dt
import os
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable, Iterator, NamedTuple
from zoneinfo import ZoneInfo, ZoneInfoNotFoundError

import numpy as np

from .errors import DataError, IngestError, ParameterError

UTC = dt.timezone.utc

TEMPERATURE_COLUMNS = ("date", "t_min", "t_avg", "t_max")
FAULT_COLUMNS = ("timestamp", "component_id", "feeder_id")


def resolve_zone(zone: str | dt.tzinfo | None) -> dt.tzinfo:
    """Turn a zone name (``"UTC"``, ``"Europe/Rome"``) into a tzinfo."""
    if zone is None:
        return UTC
    if isinstance(zone, dt.tzinfo):
        return zone
    if zone.upper() in ("UTC", "Z"):
        return UTC
    try:
        return ZoneInfo(zone)
    except (ZoneInfoNotFoundError, ValueError) as exc:
        raise ParameterError(f"unknown time zone {zone!r}") from exc


class TemperatureRecord(NamedTuple):
    date: dt.date
    t_min: float
    t_avg: float
    t_max: float
    avg_imputed: bool = False


@dataclass(frozen=True)
class TemperatureSeries:
    """Daily min/avg/max temperatures (°C) for one area, strictly date-ordered."""

    area_id: str
    records: tuple[TemperatureRecord, ...] = ()

    def __post_init__(self):
        prev = None
        for rec in self.records:
            if prev is not None and rec.date <= prev:
                raise DataError(f"dates not strictly increasing at {rec.date}")
            if not (rec.t_min <= rec.t_avg <= rec.t_max):
                raise DataError(
                    f"{rec.date}: expected t_min <= t_avg <= t_max, got "
                    f"{rec.t_min}, {rec.t_avg}, {rec.t_max}"
                )
            prev = rec.date

    @classmethod
    def from_arrays(cls, area_id, dates, t_min, t_max, t_avg=None) -> "TemperatureSeries":
        t_min = np.asarray(t_min, dtype=float)
        t_max = np.asarray(t_max, dtype=float)
        if t_avg is None:
            t_avg = 0.5 * (t_min + t_max)
        t_avg = np.asarray(t_avg, dtype=float)
        records = tuple(
            TemperatureRecord(d, float(lo), float(av), float(hi))
            for d, lo, av, hi in zip(dates, t_min, t_avg, t_max)
        )
        return cls(area_id, records)

    def __len__(self) -> int:
        return len(self.records)

    @cached_property
    def dates(self) -> list[dt.date]:
        return [r.date for r in self.records]

    @cached_property
    def t_min(self) -> np.ndarray:
        return np.array([r.t_min for r in self.records], dtype=float)

    @cached_property
    def t_avg(self) -> np.ndarray:
        return np.array([r.t_avg for r in self.records], dtype=float)

    @cached_property
    def t_max(self) -> np.ndarray:
        return np.array([r.t_max for r in self.records], dtype=float)

    @property
    def imputed_dates(self) -> list[dt.date]:
        return [r.date for r in self.records if r.avg_imputed]

    def is_contiguous(self) -> bool:
        return all(
            (b.date - a.date).days == 1 for a, b in zip(self.records, self.records[1:])
        )

    def shifted(self, offset: float) -> "TemperatureSeries":
        """Copy with every temperature raised by ``offset`` °C."""
        return TemperatureSeries(
            self.area_id,
            tuple(
                r._replace(t_min=r.t_min + offset, t_avg=r.t_avg + offset, t_max=r.t_max + offset)
                for r in self.records
            ),
        )

    def between(self, start: dt.date | None = None, end: dt.date | None = None) -> "TemperatureSeries":
        """Sub-series with ``start <= date <= end``."""
        recs = tuple(
            r for r in self.records
            if (start is None or r.date >= start) and (end is None or r.date <= end)
        )
        return TemperatureSeries(self.area_id, recs)


class FaultEvent(NamedTuple):
    timestamp: dt.datetime
    component_id: str | None = None
    feeder_id: str | None = None


def _event_key(ev: FaultEvent):
    return (ev.timestamp, ev.component_id or "", ev.feeder_id or "")


@dataclass(frozen=True)
class FaultLog:
    """Fault events ordered by UTC timestamp. Simultaneous events are kept."""

    events: tuple[FaultEvent, ...] = ()

    def __post_init__(self):
        ev = self.events
        for i in range(1, len(ev)):
            if ev[i].timestamp < ev[i - 1].timestamp:
                raise DataError(f"fault timestamps out of order at index {i}")

    @classmethod
    def from_events(cls, events: Iterable[FaultEvent]) -> "FaultLog":
        """Build a log from unordered events; ordering is deterministic for ties."""
        return cls(tuple(sorted(events, key=_event_key)))

    @classmethod
    def from_seconds(cls, seconds, origin: dt.datetime | None = None) -> "FaultLog":
        """Events at ``origin + seconds`` (POSIX epoch when ``origin`` is None)."""
        origin = origin or dt.datetime(1970, 1, 1, tzinfo=UTC)
        secs = sorted(float(s) for s in seconds)
        return cls(tuple(FaultEvent(origin + dt.timedelta(seconds=s)) for s in secs))

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self) -> Iterator[FaultEvent]:
        return iter(self.events)

    @cached_property
    def timestamps(self) -> list[dt.datetime]:
        return [e.timestamp for e in self.events]

    @cached_property
    def seconds(self) -> np.ndarray:
        """POSIX seconds of each event, float64."""
        return np.array([e.timestamp.timestamp() for e in self.events], dtype=float)

    def filter(self, keep: Callable[[FaultEvent], bool]) -> "FaultLog":
        return FaultLog(tuple(e for e in self.events if keep(e)))

    def for_feeder(self, feeder_id: str) -> "FaultLog":
        return self.filter(lambda e: e.feeder_id == feeder_id)


def _numbered_rows(fh) -> Iterator[tuple[int, list[str]]]:
    current = [0]

    def lines():
        for n, line in enumerate(fh, 1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            current[0] = n
            yield line

    for row in csv.reader(lines()):
        yield current[0], [c.strip() for c in row]


def _read_header(rows, path, required, known):
    try:
        line, header = next(rows)
    except StopIteration:
        raise IngestError("missing header row", path=path)
    missing = [c for c in required if c not in header]
    if missing:
        raise IngestError(f"missing column(s): {', '.join(missing)}", line=line, path=path)
    return {name: header.index(name) for name in known if name in header}


def _field(row, idx, name):
    i = idx.get(name)
    if i is None or i >= len(row):
        return ""
    return row[i]


def _parse_float(text, name, line, path):
    try:
        value = float(text)
    except ValueError:
        raise IngestError(f"{name}: not a number: {text!r}", line=line, path=path)
    if not np.isfinite(value):
        raise IngestError(f"{name}: non-finite value {text!r}", line=line, path=path)
    return value


def load_temperature_series(path: str | os.PathLike, area_id: str = "") -> TemperatureSeries:
    """Parse a temperature CSV into a validated, date-sorted series."""
    path = os.fspath(path)
    records = []
    seen: dict[dt.date, int] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        rows = _numbered_rows(fh)
        idx = _read_header(rows, path, ("date", "t_min", "t_max"), TEMPERATURE_COLUMNS)
        for line, row in rows:
            raw_date = _field(row, idx, "date")
            try:
                day = dt.date.fromisoformat(raw_date)
            except ValueError:
                raise IngestError(f"bad date {raw_date!r}", line=line, path=path)
            if day in seen:
                raise IngestError(
                    f"duplicate date {day} (first seen on line {seen[day]})", line=line, path=path
                )
            seen[day] = line
            t_min = _parse_float(_field(row, idx, "t_min"), "t_min", line, path)
            t_max = _parse_float(_field(row, idx, "t_max"), "t_max", line, path)
            if t_min > t_max:
                raise IngestError(f"t_min {t_min} > t_max {t_max}", line=line, path=path)
            raw_avg = _field(row, idx, "t_avg")
            if raw_avg == "":
                t_avg, imputed = 0.5 * (t_min + t_max), True
            else:
                t_avg, imputed = _parse_float(raw_avg, "t_avg", line, path), False
                if not (t_min <= t_avg <= t_max):
                    raise IngestError(
                        f"t_avg {t_avg} outside [t_min, t_max]", line=line, path=path
                    )
            records.append(TemperatureRecord(day, t_min, t_avg, t_max, imputed))
    records.sort(key=lambda r: r.date)
    return TemperatureSeries(area_id, tuple(records))


def parse_instant(text: str, zone: dt.tzinfo = UTC) -> dt.datetime:
    """ISO-8601 text to an aware UTC datetime; naive values are read in ``zone``."""
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    ts = dt.datetime.fromisoformat(text)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=zone)
    return ts.astimezone(UTC)


def load_fault_log(path: str | os.PathLike, zone: str | dt.tzinfo | None = None) -> FaultLog:
    """Parse a fault CSV. Events come back sorted; duplicates are retained."""
    path = os.fspath(path)
    tz = resolve_zone(zone)
    events = []
    with open(path, newline="", encoding="utf-8") as fh:
        rows = _numbered_rows(fh)
        idx = _read_header(rows, path, ("timestamp",), FAULT_COLUMNS)
        for line, row in rows:
            raw = _field(row, idx, "timestamp")
            try:
                ts = parse_instant(raw, tz)
            except ValueError:
                raise IngestError(f"unparseable timestamp {raw!r}", line=line, path=path)
            events.append(
                FaultEvent(
                    ts,
                    _field(row, idx, "component_id") or None,
                    _field(row, idx, "feeder_id") or None,
                )
            )
    return FaultLog.from_events(events)


def format_instant(ts: dt.datetime) -> str:
    ts = ts.astimezone(UTC)
    fmt = "%Y-%m-%dT%H:%M:%S.%fZ" if ts.microsecond else "%Y-%m-%dT%H:%M:%SZ"
    return ts.strftime(fmt)


def write_temperature_series(series: TemperatureSeries, path: str | os.PathLike) -> None:
    """Write ``series`` so that :func:`load_temperature_series` reproduces it."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TEMPERATURE_COLUMNS)
        for r in series.records:
            avg = "" if r.avg_imputed else repr(r.t_avg)
            w.writerow([r.date.isoformat(), repr(r.t_min), avg, repr(r.t_max)])


def write_fault_log(log: FaultLog, path: str | os.PathLike) -> None:
    """Write ``log`` in the ingestion format with UTC ``Z`` timestamps."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FAULT_COLUMNS)
        for e in log.events:
            w.writerow([format_instant(e.timestamp), e.component_id or "", e.feeder_id or ""])
