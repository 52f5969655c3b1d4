import datetime as dt
import math
from fractions import Fraction
from zoneinfo import ZoneInfo

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from conftest import log_from_seconds
from hwrk.errors import DataError, ParameterError
from hwrk.io_ingest import UTC, FaultEvent, FaultLog
from hwrk.tbf_stats import (
    DailyCount,
    TbfSequence,
    analyze_tbf,
    compute_tbf,
    compute_tbf_segmented,
    daily_fault_counts,
    ecdf,
    exponential_cdf,
    high_fault_days,
    hourly_histogram,
    ks_distance,
    month_segments,
    mtbf,
    short_tbf_excess,
    two_sample_ks,
)


def seq(gaps):
    return TbfSequence(np.asarray(gaps, dtype=float))


def test_gaps_from_event_times():
    assert compute_tbf(log_from_seconds([0, 10, 25])).gaps.tolist() == [10.0, 15.0]


def test_simultaneous_events_keep_zero_gap():
    assert compute_tbf(log_from_seconds([5, 5])).gaps.tolist() == [0.0]


def test_gaps_telescope_to_span():
    rng = np.random.default_rng(11)
    log = log_from_seconds(np.sort(rng.integers(0, 10**8, 1000)))
    s = compute_tbf(log)
    assert math.fsum(s.gaps) == (s.last_event - s.first_event).total_seconds()


@pytest.mark.parametrize("n", [0, 1])
def test_too_few_events(n):
    with pytest.raises(DataError):
        compute_tbf(log_from_seconds(range(n)))


def test_mtbf_examples():
    assert mtbf(seq([10, 15])) == 12.5
    assert mtbf(seq([7.25] * 13)) == 7.25
    with pytest.raises(DataError):
        mtbf(seq([]))


def test_mtbf_matches_exact_rational_sum():
    gaps = np.random.default_rng(5).uniform(0, 1e6, 10**4)
    exact = sum(Fraction(g) for g in gaps.tolist()) / len(gaps)
    assert mtbf(seq(gaps)) == pytest.approx(float(exact), rel=4 * np.finfo(float).eps)


def test_ecdf_single_point():
    f = ecdf(seq([5]))
    assert f(4.999) == 0.0 and f(5) == 1.0 and f(100) == 1.0


def test_ecdf_counts_ties():
    f = ecdf(seq([1, 1, 3]))
    assert f(1) == pytest.approx(2 / 3) and f(2.9) == pytest.approx(2 / 3) and f(3) == 1.0
    assert f.support.tolist() == [1.0, 3.0]


def test_ecdf_matches_linear_scan():
    rng = np.random.default_rng(2)
    gaps = np.round(rng.exponential(100.0, 500), 1)
    f = ecdf(seq(gaps))
    probes = np.concatenate([rng.uniform(-5, 800, 90), gaps[:10]])
    for t in probes:
        assert f(t) == sum(1 for g in gaps if g <= t) / 500
    assert f.probs[-1] == 1.0
    assert np.all(np.diff(f.probs) > 0)


def test_exponential_cdf_examples():
    assert exponential_cdf(3.0, 0.0) == 0.0
    assert exponential_cdf(3.0, 3.0) == pytest.approx(1 - math.exp(-1), abs=1e-12)
    assert exponential_cdf(3.0, 3.0 * math.log(2)) == pytest.approx(0.5, abs=1e-15)


@pytest.mark.parametrize("m, t", [(0.0, 1.0), (-1.0, 1.0), (math.inf, 1.0), (1.0, -0.5)])
def test_exponential_cdf_rejects(m, t):
    with pytest.raises(ParameterError):
        exponential_cdf(m, t)


def test_ks_single_gap_at_median():
    m = 10.0
    assert ks_distance(seq([m * math.log(2)]), m) == pytest.approx(0.5, abs=1e-15)


def dense_grid_ks(x, m):
    """sup |F_n - F| probed on a fine grid plus each jump and its left limit."""
    x = np.sort(np.asarray(x, dtype=float))
    grid = np.concatenate([np.linspace(0, x[-1] * 1.5, 200_001), x, np.nextafter(x, -np.inf)])
    fn = np.searchsorted(x, grid, side="right") / x.size
    return float(np.max(np.abs(fn - (1 - np.exp(-grid / m)))))


def test_ks_quantile_sample_matches_dense_grid():
    m, n = 4.0, 9
    x = -m * np.log(1 - np.arange(1, n + 1) / (n + 1))
    d = ks_distance(seq(x), m)
    assert d == pytest.approx(dense_grid_ks(x, m), abs=1e-12)
    assert d == pytest.approx(1 / (n + 1), abs=1e-12)


def test_ks_monte_carlo_known_rate():
    n, m = 10**4, 3600.0
    ds = []
    for s in range(100):
        gaps = np.random.default_rng(s).exponential(m, n)
        ds.append(ks_distance(seq(gaps), m))
    ds = np.array(ds)
    assert np.sum(ds < 1.63 / math.sqrt(n)) >= 95
    assert np.median(ds) < 0.02


def test_ks_agrees_with_scipy():
    gaps = np.random.default_rng(9).exponential(2.0, 300)
    ref = stats.kstest(gaps, "expon", args=(0, 2.5)).statistic
    assert ks_distance(seq(gaps), 2.5) == pytest.approx(ref, abs=1e-12)


def brute_excess(x, m, tau):
    x = np.sort(np.asarray(x, dtype=float))
    pts = np.concatenate([[0.0], x[x <= tau], [tau]])
    fn = np.searchsorted(x, pts, side="right") / x.size
    return float(np.max(fn - (1 - np.exp(-pts / m))))


def test_excess_zero_on_exponential_quantile_grid():
    # x_i = F^-1(i/n): the ECDF touches the curve at each of its own points
    m, n = 100.0, 200
    x = -m * np.log1p(-np.arange(1, n) / n)
    x = np.append(x, -m * math.log(1e-15))
    for p in short_tbf_excess(seq(x), m, [0.1 * m, 0.25 * m, 0.5 * m, m]):
        assert p.excess == pytest.approx(0.0, abs=1e-12)


def test_excess_with_half_mass_near_zero():
    rng = np.random.default_rng(4)
    gaps = np.concatenate([np.full(500, 0.5), rng.exponential(1000.0, 500)])
    m = mtbf(seq(gaps))
    (p,) = short_tbf_excess(seq(gaps), m, [m / 10])
    assert p.excess >= 0.5 - exponential_cdf(m, m / 10)


def test_excess_matches_brute_force_and_range():
    rng = np.random.default_rng(8)
    for _ in range(20):
        gaps = rng.exponential(rng.uniform(1, 50), rng.integers(1, 60))
        m = rng.uniform(1, 50)
        for tau in rng.uniform(0.01, 100, 5):
            (p,) = short_tbf_excess(seq(gaps), m, [tau])
            assert p.excess == pytest.approx(brute_excess(gaps, m, tau), abs=1e-15)
            assert -exponential_cdf(m, tau) <= p.excess <= 1


def test_excess_rejects_nonpositive_cutoff():
    with pytest.raises(ParameterError):
        short_tbf_excess(seq([1, 2]), 1.0, [0.0])


gap_lists = st.lists(st.floats(min_value=0, max_value=1e6), min_size=1, max_size=80)


@settings(max_examples=80, deadline=None)
@given(gap_lists, st.floats(min_value=0.5, max_value=1e6), st.lists(st.floats(1e-3, 2e6), min_size=2, max_size=6))
def test_excess_monotone_in_cutoff(gaps, m, cutoffs):
    cutoffs = sorted(cutoffs)
    values = [p.excess for p in short_tbf_excess(seq(gaps), m, cutoffs)]
    assert all(a <= b for a, b in zip(values, values[1:]))


@settings(max_examples=80, deadline=None)
@given(gap_lists, st.floats(min_value=0.5, max_value=1e5), st.sampled_from([1 / 3600, 1 / 60, 60.0, 86400.0]))
def test_scale_equivariance(gaps, m, k):
    base = analyze_tbf(seq(gaps), mtbf_param=m)
    scaled = analyze_tbf(seq(gaps).scaled(k), mtbf_param=m * k)
    assert scaled.ks_distance == pytest.approx(base.ks_distance, abs=1e-12)
    for a, b in zip(base.excess_profile, scaled.excess_profile):
        assert b.excess == pytest.approx(a.excess, abs=1e-12)
    assert scaled.global_excess == pytest.approx(base.global_excess, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(gap_lists)
def test_ecdf_invariants(gaps):
    f = ecdf(seq(gaps))
    assert np.all(np.diff(f.probs) >= 0)
    assert f(max(gaps)) == 1.0
    assert 0 <= f(min(gaps)) <= 1


def test_exponential_cdf_monotone_on_grid():
    grid = np.sort(np.random.default_rng(1).uniform(0, 50, 10**4))
    vals = exponential_cdf(2.0, grid)
    assert np.all(np.diff(vals) >= 0) and vals[0] >= 0 and vals[-1] < 1


def test_analyze_defaults():
    a = analyze_tbf(seq([10, 20, 30]))
    assert a.mtbf == 20.0 and a.mtbf_source == "sample"
    assert [p.cutoff for p in a.excess_profile] == [2.0, 5.0, 10.0, 20.0]
    override = analyze_tbf(seq([10, 20, 30]), mtbf_param=40.0)
    assert override.mtbf_source == "override" and override.sample_mtbf == 20.0


def test_analyze_all_zero_gaps():
    with pytest.raises(DataError):
        analyze_tbf(seq([0, 0, 0]))


def test_two_sample_ks_against_scipy():
    rng = np.random.default_rng(12)
    for _ in range(10):
        a = np.round(rng.exponential(5, rng.integers(1, 200)), 1)
        b = np.round(rng.exponential(6, rng.integers(1, 200)), 1)
        assert two_sample_ks(a, b) == pytest.approx(stats.ks_2samp(a, b).statistic, abs=1e-12)
    assert two_sample_ks([1.0], [2.0]) == 1.0
    assert two_sample_ks(a, a) == 0.0


def peak_days_log(zone="UTC"):
    """Nine faults on each of 25 May and 26 June 2017, a few scattered elsewhere."""
    tz = ZoneInfo(zone)
    local = []
    for day in (dt.date(2017, 5, 25), dt.date(2017, 6, 26)):
        local += [dt.datetime.combine(day, dt.time(h, 17), tz) for h in (0, 2, 5, 11, 13, 14, 16, 19, 23)]
    for day, n in ((dt.date(2017, 5, 2), 3), (dt.date(2017, 6, 10), 1), (dt.date(2017, 9, 30), 2)):
        local += [dt.datetime.combine(day, dt.time(8 + i), tz) for i in range(n)]
    return FaultLog.from_events(FaultEvent(t.astimezone(UTC)) for t in local)


@pytest.mark.parametrize("zone", ["UTC", "Europe/Rome"])
def test_peak_day_counts(zone):
    counts = daily_fault_counts(peak_days_log(zone), zone)
    by_doy = {c.date.timetuple().tm_yday: c.count for c in counts}
    assert by_doy[145] == 9 and by_doy[177] == 9
    assert max(v for k, v in by_doy.items() if k not in (145, 177)) <= 3
    assert sum(c.count for c in counts) == 9 + 9 + 6
    assert high_fault_days(counts, 5) == [dt.date(2017, 5, 25), dt.date(2017, 6, 26)]
    for day in (dt.date(2017, 5, 25), dt.date(2017, 6, 26)):
        assert sum(hourly_histogram(peak_days_log(zone), day, zone)) == 9


def test_daily_counts_zero_filled():
    counts = daily_fault_counts(log_from_seconds([0, 3 * 86400 + 5]))
    assert [c.count for c in counts] == [1, 0, 0, 1]
    assert daily_fault_counts(FaultLog(())) == []


def test_midnight_straddle_by_zone():
    # 21:30 and 22:30 UTC on 1 July are either side of Rome midnight (UTC+2)
    log = FaultLog.from_events(
        FaultEvent(dt.datetime(2017, 7, 1, h, 30, tzinfo=UTC)) for h in (21, 22, 23)
    )
    rome = ZoneInfo("Europe/Rome")
    expected = {}
    for e in log.events:
        d = e.timestamp.astimezone(rome).date()
        expected[d] = expected.get(d, 0) + 1
    got = {c.date: c.count for c in daily_fault_counts(log, "Europe/Rome")}
    assert got == expected == {dt.date(2017, 7, 1): 1, dt.date(2017, 7, 2): 2}
    assert {c.date: c.count for c in daily_fault_counts(log)} == {dt.date(2017, 7, 1): 3}


def test_high_fault_days_examples():
    counts = [DailyCount(dt.date(2017, 1, i), c) for i, c in enumerate([1, 4, 2, 4], start=1)]
    assert high_fault_days(counts, 4) == [dt.date(2017, 1, 2), dt.date(2017, 1, 4)]
    assert high_fault_days([], 1) == []
    with pytest.raises(ParameterError):
        high_fault_days(counts, 0)


def test_hourly_all_at_two():
    day = dt.date(2017, 1, 1)
    log = log_from_seconds([2 * 3600 + 60 * i for i in range(7)])
    bins = hourly_histogram(log, day)
    assert bins[2] == 7 and sum(bins) == 7


def test_hourly_matches_linear_scan():
    rng = np.random.default_rng(21)
    log = log_from_seconds(np.sort(rng.integers(0, 10 * 86400, 400)))
    zone = ZoneInfo("America/New_York")
    for day in {e.timestamp.astimezone(zone).date() for e in log.events}:
        expected = [0] * 24
        for e in log.events:
            local = e.timestamp.astimezone(zone)
            if local.date() == day:
                expected[local.hour] += 1
        assert hourly_histogram(log, day, "America/New_York") == expected


def test_month_segments_do_not_bridge_off_season():
    stamps = [
        dt.datetime(2017, 5, 3), dt.datetime(2017, 9, 29), dt.datetime(2017, 10, 5),
        dt.datetime(2018, 5, 1), dt.datetime(2018, 5, 2),
    ]
    log = FaultLog.from_events(FaultEvent(t.replace(tzinfo=UTC)) for t in stamps)
    segs = month_segments(log, (5, 9))
    assert [len(s) for s in segs] == [2, 2]
    tbf = compute_tbf_segmented(segs)
    assert tbf.segments == 2
    assert tbf.gaps.tolist() == [(stamps[1] - stamps[0]).total_seconds(), 86400.0]


def test_month_segments_wrapping_season():
    stamps = [dt.datetime(2017, 12, 30), dt.datetime(2018, 1, 2), dt.datetime(2018, 12, 1)]
    log = FaultLog.from_events(FaultEvent(t.replace(tzinfo=UTC)) for t in stamps)
    assert [len(s) for s in month_segments(log, (12, 2))] == [2, 1]
