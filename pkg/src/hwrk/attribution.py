"""Temporal association of faults with heat-wave episodes.

An episode covers its calendar days in full (local midnight of the first day
up to local midnight after the last day). Faults are associated with it when
they fall inside that interval extended by a delay window, because thermal
damage in cables and joints shows up with a lag. The association is purely
temporal and system-wide.
"""

from __future__ import annotations

import csv
import datetime as dt
import enum
import math
import os
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from .errors import DataError, ParameterError
from .heatwave_detect import HeatWaveEpisode
from .io_ingest import UTC, FaultLog, format_instant, resolve_zone

DEFAULT_DELAY = dt.timedelta(hours=48)


class CommonCauseScale(enum.Enum):
    CLASSIC = "classic"
    HEATWAVE = "heatwave"

    @property
    def default_gap(self) -> dt.timedelta:
        return _DEFAULT_GAPS[self]


# inside "seconds to minutes" and "up to hours" respectively
_DEFAULT_GAPS = {
    CommonCauseScale.CLASSIC: dt.timedelta(minutes=5),
    CommonCauseScale.HEATWAVE: dt.timedelta(hours=4),
}


class FaultLabel(NamedTuple):
    event_index: int
    episode_index: int | None = None
    lag: dt.timedelta | None = None

    @property
    def label(self) -> str:
        return "baseline" if self.episode_index is None else "heatwave"

    @property
    def associated(self) -> bool:
        return self.episode_index is not None


def _local_midnight(day: dt.date, tz: dt.tzinfo) -> dt.datetime:
    return dt.datetime(day.year, day.month, day.day, tzinfo=tz).astimezone(UTC)


def episode_windows(
    episodes: Sequence[HeatWaveEpisode], delay_window: dt.timedelta = DEFAULT_DELAY, zone="UTC"
) -> list[tuple[dt.datetime, dt.datetime]]:
    """(start, end + delay) UTC interval of each episode, in episode order."""
    if delay_window < dt.timedelta(0):
        raise ParameterError("delay_window must be non-negative")
    tz = resolve_zone(zone)
    return [
        (
            _local_midnight(ep.start_date, tz),
            _local_midnight(ep.end_date + dt.timedelta(days=1), tz) + delay_window,
        )
        for ep in episodes
    ]


def associate_faults(
    log: FaultLog,
    episodes: Sequence[HeatWaveEpisode],
    delay_window: dt.timedelta = DEFAULT_DELAY,
    zone="UTC",
) -> list[FaultLabel]:
    """Label every event with the earliest episode whose extended window contains it."""
    windows = episode_windows(episodes, delay_window, zone)
    labels = []
    for i, ev in enumerate(log.events):
        for k, (lo, hi) in enumerate(windows):
            if lo <= ev.timestamp <= hi:
                labels.append(FaultLabel(i, k, ev.timestamp - lo))
                break
        else:
            labels.append(FaultLabel(i))
    return labels


@dataclass(frozen=True)
class CommonCauseGroup:
    members: tuple[int, ...]
    span: dt.timedelta
    scale: CommonCauseScale


def common_cause_groups(
    log: FaultLog,
    max_gap: dt.timedelta | None = None,
    scale: CommonCauseScale = CommonCauseScale.CLASSIC,
) -> list[CommonCauseGroup]:
    """Maximal runs whose successive gaps are all <= ``max_gap``; singletons dropped."""
    scale = CommonCauseScale(scale)
    if max_gap is None:
        max_gap = scale.default_gap
    if max_gap <= dt.timedelta(0):
        raise ParameterError("max_gap must be positive")
    ts = log.timestamps
    groups = []
    start = 0
    for i in range(1, len(ts) + 1):
        if i == len(ts) or ts[i] - ts[i - 1] > max_gap:
            if i - start > 1:
                groups.append(CommonCauseGroup(tuple(range(start, i)), ts[i - 1] - ts[start], scale))
            start = i
    return groups


@dataclass(frozen=True)
class PeriodComparison:
    """Fault rates (faults/day) inside and outside heat-wave windows.

    ``rate_in`` and ``ratio`` are None without episodes; ``ratio`` is
    ``math.inf`` when no faults fall outside the windows.
    """

    n_in: int
    n_out: int
    days_in: float
    days_out: float
    rate_in: float | None
    rate_out: float
    ratio: float | None


def _merged(intervals):
    merged: list[list[dt.datetime]] = []
    for lo, hi in sorted(intervals):
        if merged and lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return merged


def period_comparison(
    log: FaultLog,
    labels: Sequence[FaultLabel],
    span: tuple[dt.datetime, dt.datetime],
    episodes: Sequence[HeatWaveEpisode] = (),
    delay_window: dt.timedelta = DEFAULT_DELAY,
    zone="UTC",
) -> PeriodComparison:
    """Compare the associated-fault rate with the baseline rate over ``span``.

    Overlapping extended windows are merged so no day is counted twice.
    """
    start, end = span
    if end <= start:
        raise DataError("span must have positive length")
    if len(labels) != len(log):
        raise DataError("labels do not match the log")
    if len(log) and (log.events[0].timestamp < start or log.events[-1].timestamp > end):
        raise DataError("span does not cover the fault log")

    day = dt.timedelta(days=1)
    total_days = (end - start) / day
    in_days = 0.0
    for lo, hi in _merged(episode_windows(episodes, delay_window, zone)):
        lo, hi = max(lo, start), min(hi, end)
        if hi > lo:
            in_days += (hi - lo) / day
    out_days = total_days - in_days

    n_in = sum(1 for lab in labels if lab.associated)
    n_out = len(labels) - n_in
    if not episodes:
        return PeriodComparison(0, n_out, 0.0, total_days, None, n_out / total_days, None)
    if in_days <= 0:
        raise DataError("heat-wave windows have zero duration inside the span")
    if out_days <= 0:
        raise DataError("no time left outside heat-wave windows")
    rate_in = n_in / in_days
    rate_out = n_out / out_days
    ratio = math.inf if rate_out == 0 else rate_in / rate_out
    return PeriodComparison(n_in, n_out, in_days, out_days, rate_in, rate_out, ratio)


def write_labels(log: FaultLog, labels: Sequence[FaultLabel], path: str | os.PathLike) -> None:
    """CSV ``timestamp,label,episode_index,lag_hours``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["timestamp", "label", "episode_index", "lag_hours"])
        for lab in labels:
            ev = log.events[lab.event_index]
            lag = "" if lab.lag is None else repr(lab.lag / dt.timedelta(hours=1))
            idx = "" if lab.episode_index is None else lab.episode_index
            w.writerow([format_instant(ev.timestamp), lab.label, idx, lag])
