import datetime as dt

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from hwrk.errors import DataError, ParameterError
from hwrk.heatwave_detect import (
    HeatWaveEpisode,
    RefStats,
    ThresholdTable,
    all_calendar_days,
    annual_max_quartiles,
    build_thresholds,
    detect_heatwaves,
    episode_magnitude,
    read_thresholds,
    write_thresholds,
)
from hwrk.io_ingest import TemperatureSeries


def series_from_tmax(t_max, start=dt.date(2017, 5, 1), area="x"):
    t_max = np.asarray(t_max, dtype=float)
    dates = [start + dt.timedelta(days=i) for i in range(t_max.size)]
    return TemperatureSeries.from_arrays(area, dates, t_max - 8.0, t_max)


def constant_table(value):
    return ThresholdTable({k: float(value) for k in all_calendar_days()})


def oracle_threshold(records, month, day, n, window):
    """Brute force: circular calendar distance per record, then sort and interpolate."""
    def pos(m, d):
        if (m, d) == (2, 29):
            m, d = 2, 28
        return dt.date(2001, m, d).toordinal() - dt.date(2001, 1, 1).toordinal()

    target = pos(month, day)
    vals = []
    for r in records:
        dist = abs(pos(r.date.month, r.date.day) - target)
        if min(dist, 365 - dist) <= window // 2:
            vals.append(r.t_max)
    vals.sort()
    h = (len(vals) - 1) * n
    lo = int(h)
    if lo + 1 >= len(vals):
        return vals[-1], len(vals)
    return vals[lo] + (h - lo) * (vals[lo + 1] - vals[lo]), len(vals)


def synthetic_reference(years=range(1981, 2011), seed=3):
    rng = np.random.default_rng(seed)
    start = dt.date(years[0], 1, 1)
    n = (dt.date(years[-1], 12, 31) - start).days + 1
    doy = np.arange(n)
    t_max = 22 + 9 * np.sin(2 * np.pi * (doy - 110) / 365.25) + rng.normal(0, 3, n)
    return series_from_tmax(np.round(t_max, 1), start=start, area="ref")


def test_constant_reference_gives_constant_thresholds():
    ref = series_from_tmax(np.full(366 * 2, 20.0), start=dt.date(2015, 1, 1))
    for n in (0.1, 0.5, 0.9, 0.99):
        table = build_thresholds(ref, n, 31)
        assert set(table.entries.values()) == {20.0}
        assert len(table.entries) == 366


def test_three_value_window_interpolates():
    # one reference year; June 1-3 hold 10, 20, 30
    t = np.full(365, 0.0)
    start = dt.date(2001, 1, 1)
    for value, day in ((10, 1), (20, 2), (30, 3)):
        t[(dt.date(2001, 6, day) - start).days] = value
    table = build_thresholds(series_from_tmax(t, start=start), 0.90, 3)
    assert table.threshold(dt.date(2017, 6, 2)) == pytest.approx(28.0, abs=1e-12)


def test_thirty_year_reference_matches_oracle():
    ref = synthetic_reference()
    table = build_thresholds(ref, 0.90, 31)
    for month, day in all_calendar_days():
        expected, size = oracle_threshold(ref.records, month, day, 0.90, 31)
        assert table.entries[(month, day)] == pytest.approx(expected, abs=1e-9)
        if month in (5, 6, 7, 8, 9, 10):
            assert size == 31 * 30
    assert table.reference_span == (1981, 2010)


def test_window_wraps_across_new_year():
    # only late-December data is hot; a 31-day window around 5 Jan must see it
    start = dt.date(2001, 1, 1)
    t = np.zeros(365)
    t[(dt.date(2001, 12, 31) - start).days] = 100.0
    table = build_thresholds(series_from_tmax(t, start=start), 0.99, 31)
    assert table.threshold(dt.date(2017, 1, 5)) > 0
    assert table.threshold(dt.date(2017, 7, 5)) == 0


def test_feb29_uses_feb28_threshold():
    ref = synthetic_reference(range(1999, 2002))
    table = build_thresholds(ref, 0.9, 31)
    assert table.entries[(2, 29)] == table.entries[(2, 28)]
    assert table.threshold(dt.date(2020, 2, 29)) == table.threshold(dt.date(2021, 2, 28))


def test_sparse_reference_rejected():
    ref = series_from_tmax([20.0] * 10, start=dt.date(2001, 6, 1))
    with pytest.raises(DataError, match="window"):
        build_thresholds(ref, 0.9, 31)


@pytest.mark.parametrize("n, w", [(0.0, 31), (1.0, 31), (0.9, 30), (0.9, 0)])
def test_bad_threshold_parameters(n, w):
    with pytest.raises(ParameterError):
        build_thresholds(synthetic_reference(range(2001, 2002)), n, w)


def pattern_series(flags, start=dt.date(2017, 6, 1)):
    return series_from_tmax([35.0 if f else 25.0 for f in flags], start=start)


def test_run_of_three_is_one_episode():
    s = pattern_series([0, 1, 1, 1, 0])
    eps = detect_heatwaves(s, constant_table(30.0))
    assert len(eps) == 1
    assert (eps[0].start_date, eps[0].end_date, eps[0].length) == (
        dt.date(2017, 6, 2), dt.date(2017, 6, 4), 3)


def test_runs_of_two_are_ignored():
    assert detect_heatwaves(pattern_series([1, 1, 0, 1, 1]), constant_table(30.0)) == []


def test_season_edge_cuts_run():
    s = pattern_series([1, 1, 1, 1], start=dt.date(2017, 4, 29))
    assert detect_heatwaves(s, constant_table(30.0), season=(5, 9)) == []
    assert len(detect_heatwaves(s, constant_table(30.0), season=None)) == 1


def test_ties_do_not_exceed():
    s = series_from_tmax([30.0] * 5)
    assert detect_heatwaves(s, constant_table(30.0)) == []


def test_gap_breaks_run():
    s = pattern_series([1, 1, 1, 1, 1, 1])
    gapped = TemperatureSeries(s.area_id, s.records[:3] + s.records[4:])
    eps = detect_heatwaves(gapped, constant_table(30.0))
    assert [e.length for e in eps] == [3]


def test_winter_season_wraps():
    s = pattern_series([1] * 5, start=dt.date(2016, 12, 30))
    assert len(detect_heatwaves(s, constant_table(30.0), season=(12, 2))) == 1
    assert detect_heatwaves(s, constant_table(30.0), season=(3, 11)) == []


def test_episode_carries_peak_and_magnitude():
    s = series_from_tmax([25, 31, 35, 33, 25])
    ep, = detect_heatwaves(s, constant_table(30.0), ref_stats=RefStats(29.0, 33.0))
    assert ep.peak_tmax == 35.0
    assert ep.magnitude == pytest.approx((2 + 6 + 4) / 4)


P25, P75 = 30.0, 34.0


def _episode(vals):
    s = series_from_tmax(vals)
    return HeatWaveEpisode(s.dates[0], s.dates[-1], len(vals), max(vals)), s


def test_magnitude_zero_at_p25():
    ep, s = _episode([P25] * 3)
    assert episode_magnitude(ep, s, RefStats(P25, P75)) == 0.0


def test_magnitude_three_at_p75():
    ep, s = _episode([P75] * 3)
    assert episode_magnitude(ep, s, RefStats(P25, P75)) == 3.0


def test_magnitude_ramp():
    delta = 1.0  # p75 - p25 = 4 delta
    ep, s = _episode([P25 + delta, P25 + 2 * delta, P25 + 3 * delta])
    assert episode_magnitude(ep, s, RefStats(P25, P75)) == pytest.approx(1.5, abs=1e-12)


def test_magnitude_degenerate_reference():
    ep, s = _episode([P75] * 3)
    with pytest.raises(DataError):
        episode_magnitude(ep, s, RefStats(30.0, 30.0))


def test_annual_max_quartiles():
    ref = series_from_tmax([10.0] * 365 + [20.0] * 365 + [30.0] * 365, start=dt.date(2001, 1, 1))
    assert annual_max_quartiles(ref) == RefStats(15.0, 25.0)


def test_thresholds_csv_round_trip(tmp_path):
    table = build_thresholds(synthetic_reference(range(2001, 2004)), 0.9, 31)
    write_thresholds(table, tmp_path / "t.csv")
    back = read_thresholds(tmp_path / "t.csv")
    assert back.entries == table.entries
    assert (tmp_path / "t.csv").read_text().splitlines()[0] == "month,day,threshold_c"


half_degrees = st.integers(min_value=30, max_value=80).map(lambda k: k / 2)


@st.composite
def analysis_case(draw):
    n = draw(st.integers(min_value=1, max_value=60))
    t = draw(st.lists(half_degrees, min_size=n, max_size=n))
    month = draw(st.integers(min_value=1, max_value=12))
    start = dt.date(2017, month, draw(st.integers(min_value=1, max_value=28)))
    return series_from_tmax(t, start=start)


def _ref_from(seed):
    rng = np.random.default_rng(seed)
    start = dt.date(2001, 1, 1)
    t = np.round(rng.normal(28, 4, 730) * 2) / 2
    return series_from_tmax(t, start=start)


@settings(max_examples=40, deadline=None)
@given(analysis_case(), st.integers(0, 20), st.integers(-20, 20).map(lambda k: k / 2))
def test_shift_invariance(series, seed, c):
    ref = _ref_from(seed)
    base_table = build_thresholds(ref, 0.9, 31)
    shifted_table = build_thresholds(ref.shifted(c), 0.9, 31)
    for key in base_table.entries:
        assert shifted_table.entries[key] == pytest.approx(base_table.entries[key] + c, abs=1e-9)
    spans = lambda eps: [(e.start_date, e.end_date, e.length) for e in eps]
    assert spans(detect_heatwaves(series, base_table, season=None)) == spans(
        detect_heatwaves(series.shifted(c), shifted_table, season=None))


@settings(max_examples=60, deadline=None)
@given(analysis_case(), st.integers(1, 5), st.sampled_from([None, (5, 9), (11, 2)]))
def test_episodes_maximal_disjoint_and_valid(series, min_run, season):
    table = constant_table(30.0)
    eps = detect_heatwaves(series, table, min_run=min_run, season=season)
    by_date = {r.date: r for r in series.records}

    def hot(day):
        from hwrk.heatwave_detect import in_season
        rec = by_date.get(day)
        return rec is not None and in_season(day, season) and rec.t_max > 30.0

    seen = set()
    for ep in eps:
        assert ep.length >= min_run
        assert all(hot(d) for d in ep.days())
        assert not hot(ep.start_date - dt.timedelta(1))
        assert not hot(ep.end_date + dt.timedelta(1))
        assert seen.isdisjoint(ep.days())
        seen.update(ep.days())
    assert [e.start_date for e in eps] == sorted(e.start_date for e in eps)
    # every hot day inside a long-enough run is covered
    run = []
    for rec in series.records + (None,):
        if rec is not None and hot(rec.date) and (not run or (rec.date - run[-1]).days == 1):
            run.append(rec.date)
            continue
        if len(run) >= min_run:
            assert set(run) <= seen
        run = [rec.date] if rec is not None and hot(rec.date) else []


@settings(max_examples=30, deadline=None)
@given(analysis_case(), st.integers(0, 20), st.floats(0.05, 0.9), st.floats(0.0, 0.09))
def test_raising_percentile_never_adds_episode_days(series, seed, n_low, bump):
    ref = _ref_from(seed)
    low = detect_heatwaves(series, build_thresholds(ref, n_low, 31))
    high = detect_heatwaves(series, build_thresholds(ref, n_low + bump, 31))
    assert sum(e.length for e in high) <= sum(e.length for e in low)
