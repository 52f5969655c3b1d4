"""Time-between-failures statistics and fault-count profiles.

All durations are in seconds. The exponential reference model is
``F(t) = 1 - exp(-t / mtbf)``; the distance between it and the empirical CDF
of the gaps is summarised by the one-sample Kolmogorov-Smirnov distance and by
the short-TBF excess, the largest amount by which the ECDF rises above the
exponential curve on ``[0, cutoff]``.
"""

from __future__ import annotations

import datetime as dt
import math
from collections import Counter
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DataError, ParameterError
from .heatwave_detect import in_season
from .io_ingest import FaultLog, resolve_zone

DEFAULT_CUTOFF_FRACTIONS = (0.1, 0.25, 0.5, 1.0)


@dataclass(frozen=True, eq=False)
class TbfSequence:
    """Gaps between consecutive faults.

    ``segments`` counts the disjoint observation windows the gaps were drawn
    from; with a single segment the gaps telescope to the log span.
    """

    gaps: np.ndarray
    first_event: dt.datetime | None = None
    last_event: dt.datetime | None = None
    segments: int = 1

    def __post_init__(self):
        gaps = np.asarray(self.gaps, dtype=float)
        if gaps.ndim != 1:
            raise DataError("gaps must be one-dimensional")
        if gaps.size and (not np.all(np.isfinite(gaps)) or gaps.min() < 0):
            raise DataError("gaps must be finite and non-negative")
        object.__setattr__(self, "gaps", gaps)

    def __len__(self) -> int:
        return self.gaps.size

    @classmethod
    def concat(cls, parts: Sequence["TbfSequence"]) -> "TbfSequence":
        parts = [p for p in parts if len(p)]
        if not parts:
            return cls(np.empty(0))
        return cls(
            np.concatenate([p.gaps for p in parts]),
            parts[0].first_event,
            parts[-1].last_event,
            sum(p.segments for p in parts),
        )

    def scaled(self, k: float) -> "TbfSequence":
        return TbfSequence(self.gaps * k, self.first_event, self.last_event, self.segments)


def compute_tbf(log: FaultLog) -> TbfSequence:
    if len(log) < 2:
        raise DataError(f"need at least 2 fault events for TBF, got {len(log)}")
    return TbfSequence(np.diff(log.seconds), log.events[0].timestamp, log.events[-1].timestamp)


def _require_gaps(seq: TbfSequence):
    if len(seq) == 0:
        raise DataError("empty TBF sequence")


def mtbf(seq: TbfSequence) -> float:
    """Arithmetic mean of the gaps (compensated summation)."""
    _require_gaps(seq)
    return math.fsum(seq.gaps.tolist()) / len(seq)


@dataclass(frozen=True, eq=False)
class Ecdf:
    """Right-continuous step function on sorted unique support points."""

    support: np.ndarray
    probs: np.ndarray

    def __call__(self, t):
        idx = np.searchsorted(self.support, t, side="right")
        vals = np.where(idx > 0, self.probs[np.maximum(idx - 1, 0)], 0.0)
        return float(vals) if np.ndim(vals) == 0 else vals


def ecdf(seq: TbfSequence) -> Ecdf:
    _require_gaps(seq)
    x = np.sort(seq.gaps)
    support, counts = np.unique(x, return_counts=True)
    probs = np.cumsum(counts) / x.size
    probs[-1] = 1.0
    return Ecdf(support, probs)


def exponential_cdf(mtbf: float, t):
    """1 - exp(-t/mtbf); accepts a scalar or an array of ``t``."""
    if not (mtbf > 0 and math.isfinite(mtbf)):
        raise ParameterError(f"mtbf must be positive and finite, got {mtbf}")
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise ParameterError("t must be non-negative")
    out = -np.expm1(-arr / mtbf)
    return float(out) if out.ndim == 0 else out


def ks_distance(seq: TbfSequence, mtbf_param: float) -> float:
    """One-sample KS distance between the gaps and the exponential CDF."""
    _require_gaps(seq)
    x = np.sort(seq.gaps)
    n = x.size
    f = exponential_cdf(mtbf_param, x)
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - f)
    d_minus = np.max(f - (i - 1) / n)
    return float(min(1.0, max(d_plus, d_minus, 0.0)))


class ExcessPoint(NamedTuple):
    cutoff: float
    excess: float


def _excess_at(x_sorted: np.ndarray, mtbf_param: float, tau: float) -> float:
    n = x_sorted.size
    k = int(np.searchsorted(x_sorted, tau, side="right"))
    # candidate points: t=0, every sample point <= tau, and tau itself
    zero_mass = int(np.searchsorted(x_sorted, 0.0, side="right")) / n
    best = zero_mass
    if k:
        pts = x_sorted[:k]
        ranks = np.searchsorted(x_sorted, pts, side="right") / n
        best = max(best, float(np.max(ranks - exponential_cdf(mtbf_param, pts))))
    best = max(best, k / n - exponential_cdf(mtbf_param, tau))
    return best


def short_tbf_excess(
    seq: TbfSequence, mtbf_param: float, cutoffs: Sequence[float]
) -> list[ExcessPoint]:
    """sup over t in [0, tau] of ECDF(t) - F_exp(t), for each cutoff tau."""
    _require_gaps(seq)
    if not (mtbf_param > 0):
        raise ParameterError(f"mtbf_param must be positive, got {mtbf_param}")
    x = np.sort(seq.gaps)
    out = []
    for tau in cutoffs:
        if not (tau > 0):
            raise ParameterError(f"cutoffs must be positive, got {tau}")
        out.append(ExcessPoint(float(tau), _excess_at(x, mtbf_param, float(tau))))
    return out


def global_excess(seq: TbfSequence, mtbf_param: float) -> float:
    """Excess over the whole support: sup over t >= 0 of ECDF(t) - F_exp(t)."""
    _require_gaps(seq)
    x = np.sort(seq.gaps)
    return _excess_at(x, mtbf_param, float(x[-1]) if x[-1] > 0 else 1.0)


@dataclass(frozen=True, eq=False)
class TbfAnalysis:
    n_gaps: int
    mtbf: float
    mtbf_source: str
    sample_mtbf: float
    ecdf: Ecdf
    ks_distance: float
    excess_profile: list[ExcessPoint]
    global_excess: float

    def curve(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(t, ECDF(t), F_exp(t)) at each ECDF support point."""
        t = self.ecdf.support
        return t, self.ecdf.probs, exponential_cdf(self.mtbf, t)

    def excess_at(self, cutoff: float) -> float:
        for p in self.excess_profile:
            if p.cutoff == cutoff:
                return p.excess
        raise KeyError(cutoff)


def analyze_tbf(
    seq: TbfSequence,
    mtbf_param: float | None = None,
    cutoff_fractions: Sequence[float] = DEFAULT_CUTOFF_FRACTIONS,
    cutoffs: Sequence[float] | None = None,
) -> TbfAnalysis:
    """Full comparison of a TBF sample against its exponential reference.

    The exponential parameter is the sample MTBF unless ``mtbf_param`` is given.
    Cutoffs default to ``cutoff_fractions`` times that parameter.
    """
    _require_gaps(seq)
    sample_mtbf = mtbf(seq)
    if mtbf_param is None:
        if sample_mtbf <= 0:
            raise DataError("all gaps are zero; MTBF is degenerate")
        param, source = sample_mtbf, "sample"
    else:
        param, source = float(mtbf_param), "override"
    if cutoffs is None:
        cutoffs = [f * param for f in cutoff_fractions]
    return TbfAnalysis(
        n_gaps=len(seq),
        mtbf=param,
        mtbf_source=source,
        sample_mtbf=sample_mtbf,
        ecdf=ecdf(seq),
        ks_distance=ks_distance(seq, param),
        excess_profile=short_tbf_excess(seq, param, cutoffs),
        global_excess=global_excess(seq, param),
    )


def two_sample_ks(a, b) -> float:
    """sup_t |F_a(t) - F_b(t)| between two empirical distributions."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise DataError("two-sample KS needs two non-empty samples")
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


class DailyCount(NamedTuple):
    date: dt.date
    count: int


def daily_fault_counts(log: FaultLog, zone="UTC") -> list[DailyCount]:
    """Faults per local calendar date, zero-filled across the log's span."""
    if len(log) == 0:
        return []
    tz = resolve_zone(zone)
    per_day = Counter(e.timestamp.astimezone(tz).date() for e in log.events)
    first, last = min(per_day), max(per_day)
    return [
        DailyCount(first + dt.timedelta(i), per_day.get(first + dt.timedelta(i), 0))
        for i in range((last - first).days + 1)
    ]


def high_fault_days(counts: Sequence[DailyCount], min_count: int) -> list[dt.date]:
    if min_count < 1:
        raise ParameterError(f"min_count must be >= 1, got {min_count}")
    return sorted(c.date for c in counts if c.count >= min_count)


def hourly_histogram(log: FaultLog, date: dt.date, zone="UTC") -> list[int]:
    """24 bins of fault counts by local hour on ``date``."""
    tz = resolve_zone(zone)
    bins = [0] * 24
    for e in log.events:
        local = e.timestamp.astimezone(tz)
        if local.date() == date:
            bins[local.hour] += 1
    return bins


def month_segments(log: FaultLog, months: tuple[int, int], zone="UTC") -> list[FaultLog]:
    """Split the in-season events into one log per contiguous season block.

    A season block is one run of the month range inside a single season year,
    so gaps never span the excluded months.
    """
    tz = resolve_zone(zone)
    first, last = months
    blocks: dict[int, list] = {}
    for e in log.events:
        local = e.timestamp.astimezone(tz)
        if not in_season(local.date(), months):
            continue
        season_year = local.year
        if first > last and local.month <= last:
            season_year -= 1
        blocks.setdefault(season_year, []).append(e)
    return [FaultLog(tuple(blocks[y])) for y in sorted(blocks)]


def compute_tbf_segmented(segments: Sequence[FaultLog]) -> TbfSequence:
    """TBF pooled over several logs without bridging gaps between them."""
    return TbfSequence.concat([compute_tbf(s) for s in segments if len(s) >= 2])
