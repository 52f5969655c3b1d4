"""Calendar-day percentile thresholds and heat-wave episode extraction.

A heat wave is a maximal run of at least ``min_run`` consecutive in-season days
whose maximum temperature strictly exceeds the threshold of that calendar day.
The threshold of a calendar day is the ``percentile_n`` quantile of all
reference-period daily maxima falling in a window of ``window_days`` calendar
days centred on it. Windows wrap across the year boundary and 29 February is
pooled with 28 February.
"""

from __future__ import annotations

import csv
import datetime as dt
import math
import os
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .errors import DataError, IngestError, ParameterError
from .io_ingest import TemperatureSeries

DAYS_IN_CALENDAR = 365
_FEB28_POS = 58


def calendar_position(day: dt.date) -> int:
    """0-based day index in a 365-day calendar; 29 Feb maps onto 28 Feb."""
    if day.month == 2 and day.day == 29:
        return _FEB28_POS
    return dt.date(2001, day.month, day.day).timetuple().tm_yday - 1


def all_calendar_days() -> list[tuple[int, int]]:
    """The 366 (month, day) keys of a leap year, in calendar order."""
    start = dt.date(2000, 1, 1)
    return [((start + dt.timedelta(i)).month, (start + dt.timedelta(i)).day) for i in range(366)]


def interpolated_percentile(values, n: float) -> float:
    """Linear interpolation between order statistics at 1-based rank (m-1)*n + 1."""
    x = np.sort(np.asarray(values, dtype=float))
    m = x.size
    if m == 0:
        raise DataError("percentile of an empty sample")
    h = (m - 1) * n
    lo = int(math.floor(h))
    if lo >= m - 1:
        return float(x[-1])
    frac = h - lo
    return float(x[lo] + frac * (x[lo + 1] - x[lo]))


class ReferenceSpan(NamedTuple):
    start_year: int
    end_year: int


@dataclass(frozen=True)
class ThresholdTable:
    """Per-calendar-day thresholds keyed by (month, day), all 366 keys present."""

    entries: dict
    percentile_n: float | None = None
    reference_span: ReferenceSpan | None = None
    window_days: int | None = None

    def __post_init__(self):
        missing = [k for k in all_calendar_days() if k not in self.entries]
        if missing:
            raise DataError(f"threshold table missing {len(missing)} calendar days, e.g. {missing[0]}")
        if not all(math.isfinite(v) for v in self.entries.values()):
            raise DataError("threshold table contains non-finite values")

    def threshold(self, day: dt.date) -> float:
        if day.month == 2 and day.day == 29:
            return self.entries[(2, 28)]
        return self.entries[(day.month, day.day)]

    def shifted(self, offset: float) -> "ThresholdTable":
        return replace(self, entries={k: v + offset for k, v in self.entries.items()})


def build_thresholds(
    reference: TemperatureSeries,
    percentile_n: float = 0.90,
    window_days: int = 31,
) -> ThresholdTable:
    """Percentile thresholds for every calendar day from a reference series."""
    if not (0.0 < percentile_n < 1.0):
        raise ParameterError(f"percentile_n must lie in (0, 1), got {percentile_n}")
    if window_days < 1 or window_days % 2 == 0:
        raise ParameterError(f"window_days must be an odd integer >= 1, got {window_days}")
    if len(reference) == 0:
        raise DataError("reference series is empty")

    buckets: list[list[float]] = [[] for _ in range(DAYS_IN_CALENDAR)]
    for rec in reference.records:
        buckets[calendar_position(rec.date)].append(rec.t_max)

    half = window_days // 2
    by_position = np.empty(DAYS_IN_CALENDAR)
    for pos in range(DAYS_IN_CALENDAR):
        window = {(pos + off) % DAYS_IN_CALENDAR for off in range(-half, half + 1)}
        pooled = [v for p in sorted(window) for v in buckets[p]]
        if not pooled:
            raise DataError(
                f"no reference data within the {window_days}-day window of calendar day {pos + 1}"
            )
        by_position[pos] = interpolated_percentile(pooled, percentile_n)

    entries = {}
    for month, day in all_calendar_days():
        entries[(month, day)] = float(by_position[calendar_position(dt.date(2000, month, day))])
    years = [r.date.year for r in reference.records]
    return ThresholdTable(
        entries, percentile_n, ReferenceSpan(min(years), max(years)), window_days
    )


def write_thresholds(table: ThresholdTable, path: str | os.PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["month", "day", "threshold_c"])
        for month, day in all_calendar_days():
            w.writerow([month, day, repr(table.entries[(month, day)])])


def read_thresholds(path: str | os.PathLike) -> ThresholdTable:
    entries = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for lineno, row in enumerate(reader, start=2):
            try:
                entries[(int(row["month"]), int(row["day"]))] = float(row["threshold_c"])
            except (KeyError, TypeError, ValueError):
                raise IngestError("malformed threshold row", line=lineno, path=os.fspath(path))
    return ThresholdTable(entries)


class RefStats(NamedTuple):
    """25th and 75th percentiles of the reference period's annual maxima."""

    p25: float
    p75: float


def annual_max_quartiles(reference: TemperatureSeries) -> RefStats:
    maxima: dict[int, float] = {}
    for rec in reference.records:
        y = rec.date.year
        maxima[y] = max(maxima.get(y, -math.inf), rec.t_max)
    if not maxima:
        raise DataError("reference series is empty")
    vals = list(maxima.values())
    return RefStats(interpolated_percentile(vals, 0.25), interpolated_percentile(vals, 0.75))


@dataclass(frozen=True)
class HeatWaveEpisode:
    start_date: dt.date
    end_date: dt.date
    length: int
    peak_tmax: float
    magnitude: float | None = None

    def __post_init__(self):
        if self.length != (self.end_date - self.start_date).days + 1:
            raise DataError("episode length inconsistent with its dates")

    def days(self) -> list[dt.date]:
        return [self.start_date + dt.timedelta(i) for i in range(self.length)]


def in_season(day: dt.date, season: tuple[int, int] | None) -> bool:
    """Inclusive month range; ranges such as (11, 2) wrap over New Year."""
    if season is None:
        return True
    first, last = season
    if first <= last:
        return first <= day.month <= last
    return day.month >= first or day.month <= last


def _check_season(season):
    if season is None:
        return
    if len(season) != 2 or not all(1 <= m <= 12 for m in season):
        raise ParameterError(f"season must be a (first_month, last_month) pair, got {season!r}")


def episode_magnitude(
    episode: HeatWaveEpisode, series: TemperatureSeries, ref_stats: RefStats
) -> float:
    """Sum of daily magnitudes max(0, (t_max - p25) / (p75 - p25)) over the episode."""
    p25, p75 = ref_stats
    if not p75 > p25:
        raise DataError(f"degenerate reference quartiles: p25={p25}, p75={p75}")
    span = p75 - p25
    total = 0.0
    for rec in series.records:
        if episode.start_date <= rec.date <= episode.end_date:
            total += max(0.0, (rec.t_max - p25) / span)
    return total


def detect_heatwaves(
    series: TemperatureSeries,
    thresholds: ThresholdTable,
    min_run: int = 3,
    season: tuple[int, int] | None = None,
    ref_stats: RefStats | None = None,
) -> list[HeatWaveEpisode]:
    """Maximal runs of consecutive in-season exceedance days, at least ``min_run`` long.

    Missing dates break a run. When ``ref_stats`` is given each episode carries
    its magnitude.
    """
    if min_run < 1:
        raise ParameterError(f"min_run must be >= 1, got {min_run}")
    _check_season(season)

    runs: list[list] = []
    current: list = []
    prev_date = None
    for rec in series.records:
        hot = in_season(rec.date, season) and rec.t_max > thresholds.threshold(rec.date)
        contiguous = prev_date is not None and (rec.date - prev_date).days == 1
        if current and not (hot and contiguous):
            runs.append(current)
            current = []
        if hot:
            current.append(rec)
        prev_date = rec.date
    if current:
        runs.append(current)

    episodes = []
    for run in runs:
        if len(run) < min_run:
            continue
        ep = HeatWaveEpisode(
            run[0].date, run[-1].date, len(run), max(r.t_max for r in run)
        )
        if ref_stats is not None:
            ep = replace(ep, magnitude=episode_magnitude(ep, series, ref_stats))
        episodes.append(ep)
    return episodes
