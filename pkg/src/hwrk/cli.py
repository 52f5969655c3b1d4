"""``hwrk`` command line: heatwaves, analyze, simulate, compare.

Exit codes: 0 success, 1 I/O error, 2 data validation error, 3 parameter error.
Set ``HWRK_NO_COLOR`` to disable coloured diagnostics.
"""

from __future__ import annotations

import argparse
import datetime as dt
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .attribution import (
    CommonCauseScale,
    associate_faults,
    common_cause_groups,
    period_comparison,
    write_labels,
)
from .errors import DataError, ParameterError
from .failure_sim import GENERATOR_NAME, SimulationConfig, run_heatwave_process, times_to_log
from .heatwave_detect import (
    annual_max_quartiles,
    build_thresholds,
    detect_heatwaves,
    in_season,
    write_thresholds,
)
from .io_ingest import (
    UTC,
    FaultLog,
    load_fault_log,
    load_temperature_series,
    resolve_zone,
    write_fault_log,
)
from .report import (
    SCHEMA_VERSION,
    comparison_dict,
    day_of_year,
    episode_dict,
    file_digest,
    tbf_summary,
    write_curve_csv,
    write_daily_csv,
    write_episodes_csv,
    write_hourly_csv,
    write_json,
)
from .tbf_stats import (
    DEFAULT_CUTOFF_FRACTIONS,
    analyze_tbf,
    compute_tbf,
    compute_tbf_segmented,
    daily_fault_counts,
    high_fault_days,
    hourly_histogram,
    month_segments,
    two_sample_ks,
)

EXIT_IO, EXIT_DATA, EXIT_PARAM = 1, 2, 3

MAGNITUDE_NOTE = (
    "episode magnitude = sum over episode days of max(0, (t_max - p25) / (p75 - p25)), "
    "p25/p75 being quartiles of the reference period's annual maxima (HWMId-style)"
)
LILLIEFORS_NOTE = (
    "ks_critical_99 = 1.63/sqrt(n) assumes a known rate; with the sample MTBF the "
    "comparison is conservative (estimated-parameter bias)"
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ParameterError(message)


def _diag(level: str, message: str) -> None:
    colours = {"error": "31", "warning": "33"}
    use_colour = sys.stderr.isatty() and not os.environ.get("HWRK_NO_COLOR")
    tag = f"{level}:"
    if use_colour and level in colours:
        tag = f"\033[{colours[level]}m{tag}\033[0m"
    print(f"hwrk {tag} {message}", file=sys.stderr)


def _month_range(text: str) -> tuple[int, int] | None:
    if text.lower() in ("all", "none", ""):
        return None
    try:
        first, _, last = text.partition("-")
        rng = (int(first), int(last or first))
    except ValueError:
        raise ParameterError(f"month range must look like 5-9, got {text!r}")
    if not all(1 <= m <= 12 for m in rng):
        raise ParameterError(f"months must be in 1..12, got {text!r}")
    return rng


def _fractions(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ParameterError(f"cutoffs must be a comma-separated list of numbers, got {text!r}")
    if not vals or any(v <= 0 for v in vals):
        raise ParameterError("cutoff fractions must be positive")
    return vals


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _common_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    default = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--zone", default=default("UTC"),
                        help="time zone for naive timestamps and calendar days (default UTC)")
    parser.add_argument("--seed", type=int, default=default(None),
                        help="random seed (overrides the simulation config seed)")
    parser.add_argument("--out-dir", default=default("."), help="directory for output files")


def _heatwave_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--percentile", type=float, default=0.90, help="threshold percentile as a fraction")
    parser.add_argument("--window", type=int, default=31, help="centred calendar window in days (odd)")
    parser.add_argument("--season", default="5-9", help="month range such as 5-9, or 'all'")
    parser.add_argument("--min-run", type=int, default=3, help="minimum consecutive exceedance days")
    parser.add_argument("--reference-temp", type=float, default=None,
                        help="area reference temperature in °C (recorded only)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hwrk", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"hwrk {__version__}")
    _common_flags(parser, suppress=False)
    common = _Parser(add_help=False)
    _common_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("heatwaves", parents=[common], help="thresholds and heat-wave episodes")
    p.add_argument("reference", help="reference-period temperature CSV")
    p.add_argument("analysis", help="temperature CSV to scan for heat waves")
    _heatwave_flags(p)

    p = sub.add_parser("analyze", parents=[common], help="TBF statistics of a fault log")
    p.add_argument("faults", help="fault log CSV")
    p.add_argument("--months", default="all", help="restrict to a month range such as 5-9")
    p.add_argument("--subperiod", action="append", default=[], help="extra month-range summary (repeatable)")
    p.add_argument("--cutoffs", default=",".join(map(str, DEFAULT_CUTOFF_FRACTIONS)),
                   help="short-TBF cutoffs as fractions of the MTBF")
    p.add_argument("--mtbf-hours", type=float, default=None, help="exponential parameter override")
    p.add_argument("--min-count", type=int, default=5, help="daily count flagging a high-fault day")
    p.add_argument("--feeder", default=None, help="analyse only this feeder_id")
    p.add_argument("--temperature", default=None, help="temperature CSV for the analysed period")
    p.add_argument("--reference", default=None, help="reference temperature CSV (enables attribution)")
    p.add_argument("--delay-hours", type=float, default=48.0, help="post-episode delay window")
    p.add_argument("--classic-gap-minutes", type=float, default=5.0)
    p.add_argument("--heatwave-gap-hours", type=float, default=4.0)
    _heatwave_flags(p)

    p = sub.add_parser("simulate", parents=[common], help="simulate a fault log from a JSON config")
    p.add_argument("config", help="simulation config JSON")
    p.add_argument("output", help="fault log CSV to write")

    p = sub.add_parser("compare", parents=[common], help="compare the TBF of two fault logs")
    p.add_argument("log_a")
    p.add_argument("log_b")
    p.add_argument("--months", default="all")
    p.add_argument("--cutoffs", default=",".join(map(str, DEFAULT_CUTOFF_FRACTIONS)))
    p.add_argument("--mtbf-hours", type=float, default=None)
    return parser


def _check_heatwave_flags(args) -> None:
    """Reject bad detection flags before any input is read."""
    _month_range(args.season)
    if not 0 < args.percentile < 1:
        raise ParameterError(f"--percentile must be in (0, 1), got {args.percentile}")
    if args.window < 1 or args.window % 2 == 0:
        raise ParameterError(f"--window must be a positive odd number of days, got {args.window}")
    if args.min_run < 1:
        raise ParameterError(f"--min-run must be >= 1, got {args.min_run}")


def _heatwave_config(args) -> dict:
    return {
        "percentile": args.percentile,
        "window_days": args.window,
        "season": list(_month_range(args.season) or []) or None,
        "min_run": args.min_run,
        "reference_temperature_c": args.reference_temp,
    }


def _episodes(reference, analysis, args):
    table = build_thresholds(reference, args.percentile, args.window)
    try:
        stats = annual_max_quartiles(reference)
        if not stats.p75 > stats.p25:
            stats = None
    except DataError:
        stats = None
    episodes = detect_heatwaves(analysis, table, args.min_run, _month_range(args.season), stats)
    return table, stats, episodes


def cmd_heatwaves(args) -> int:
    _check_heatwave_flags(args)
    out = _out_dir(args)
    reference = load_temperature_series(args.reference, Path(args.reference).stem)
    analysis = load_temperature_series(args.analysis, Path(args.analysis).stem)
    table, stats, episodes = _episodes(reference, analysis, args)
    write_thresholds(table, out / "thresholds.csv")
    write_episodes_csv(episodes, out / "episodes.csv")
    warnings = []
    if stats is None:
        warnings.append("reference annual maxima have degenerate quartiles; magnitudes omitted")
    for series in (reference, analysis):
        if series.imputed_dates:
            warnings.append(f"{series.area_id}: t_avg imputed on {len(series.imputed_dates)} day(s)")
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "heatwaves",
        "inputs": {
            "reference": {**file_digest(args.reference), "rows": len(reference)},
            "analysis": {**file_digest(args.analysis), "rows": len(analysis)},
        },
        "config": {**_heatwave_config(args), "reference_span": list(table.reference_span)},
        "ref_stats": None if stats is None else {"p25": stats.p25, "p75": stats.p75},
        "episodes": [episode_dict(e) for e in episodes],
        "warnings": warnings,
        "notes": [MAGNITUDE_NOTE],
    }
    write_json(doc, out / "heatwaves.json")
    for w in warnings:
        _diag("warning", w)
    return 0


def _tbf_for(log: FaultLog, months, zone):
    if months is None:
        return compute_tbf(log)
    seq = compute_tbf_segmented(month_segments(log, months, zone))
    if len(seq) == 0:
        raise DataError(f"fewer than 2 fault events inside months {months[0]}-{months[1]}")
    return seq


def _analysis(seq, fractions, mtbf_hours):
    override = None if mtbf_hours is None else mtbf_hours * 3600.0
    if override is not None and override <= 0:
        raise ParameterError("--mtbf-hours must be positive")
    return analyze_tbf(seq, override, cutoff_fractions=fractions)


def cmd_analyze(args) -> int:
    out = _out_dir(args)
    zone = resolve_zone(args.zone)
    months = _month_range(args.months)
    fractions = _fractions(args.cutoffs)
    if args.min_count < 1:
        raise ParameterError("--min-count must be >= 1")
    _check_heatwave_flags(args)
    log = load_fault_log(args.faults, zone)
    rows = len(log)
    if args.feeder is not None:
        log = log.for_feeder(args.feeder)
    if months is not None:
        log = log.filter(lambda e: in_season(e.timestamp.astimezone(zone).date(), months))
    if len(log) < 2:
        raise DataError(f"need at least 2 fault events after filtering, found {len(log)}")
    warnings: list[str] = []

    seq = _tbf_for(log, months, zone)
    full = _analysis(seq, fractions, args.mtbf_hours)
    subperiods = []
    for text in args.subperiod:
        rng = _month_range(text)
        try:
            sub_seq = _tbf_for(log, rng, zone)
            summary = tbf_summary(_analysis(sub_seq, fractions, args.mtbf_hours), sub_seq.segments, fractions)
        except DataError as exc:
            warnings.append(f"subperiod {text}: {exc}")
            summary = None
        subperiods.append({"months": list(rng) if rng else [], "summary": summary})

    counts = daily_fault_counts(log, zone)
    if months is not None:
        counts = [c for c in counts if in_season(c.date, months)]
    flagged = high_fault_days(counts, args.min_count)
    by_date = {c.date: c.count for c in counts}
    high = []
    for day in flagged:
        bins = hourly_histogram(log, day, zone)
        write_hourly_csv(bins, out / f"hourly_{day.isoformat()}.csv")
        high.append({"date": day.isoformat(), "day_of_year": day_of_year(day), "count": by_date[day], "hourly": bins})

    temperature = None
    if args.temperature:
        temperature = load_temperature_series(args.temperature, Path(args.temperature).stem)
        if temperature.imputed_dates:
            warnings.append(f"t_avg imputed on {len(temperature.imputed_dates)} day(s)")

    heatwaves = attribution = None
    inputs = {"faults": {**file_digest(args.faults), "rows": rows, "analysed": len(log)}}
    if temperature is not None:
        inputs["temperature"] = {**file_digest(args.temperature), "rows": len(temperature)}
    if args.reference:
        if temperature is None:
            raise ParameterError("--reference requires --temperature")
        reference = load_temperature_series(args.reference, Path(args.reference).stem)
        inputs["reference"] = {**file_digest(args.reference), "rows": len(reference)}
        _, _, episodes = _episodes(reference, temperature, args)
        heatwaves = [episode_dict(e) for e in episodes]
        attribution, labels = _attribution(log, episodes, temperature, zone, args)
        write_labels(log, labels, out / "labels.csv")

    write_curve_csv(full, out / "ecdf_vs_exp.csv")
    write_daily_csv(counts, out / "daily_counts.csv", temperature)

    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "analysis",
        "inputs": inputs,
        "config": {
            "zone": args.zone,
            "months": list(months) if months else None,
            "subperiods": args.subperiod,
            "cutoff_fractions": fractions,
            "mtbf_hours_override": args.mtbf_hours,
            "min_count": args.min_count,
            "feeder": args.feeder,
            "delay_hours": args.delay_hours,
            "heatwave_detection": _heatwave_config(args) if args.reference else None,
        },
        "tbf": {"full": tbf_summary(full, seq.segments, fractions), "subperiods": subperiods},
        "daily": {
            "n_days": len(counts),
            "total_faults": sum(c.count for c in counts),
            "max_count": max((c.count for c in counts), default=0),
            "min_count": args.min_count,
            "high_fault_days": high,
        },
        "heatwaves": heatwaves,
        "attribution": attribution,
        "warnings": warnings,
        "notes": [LILLIEFORS_NOTE] + ([MAGNITUDE_NOTE] if args.reference else []),
    }
    write_json(doc, out / "analysis.json")
    for w in warnings:
        _diag("warning", w)
    return 0


def _attribution(log, episodes, temperature, zone, args):
    delay = dt.timedelta(hours=args.delay_hours)
    if delay < dt.timedelta(0):
        raise ParameterError("--delay-hours must be non-negative")
    labels = associate_faults(log, episodes, delay, zone)
    first_day = min(temperature.dates[0], log.events[0].timestamp.astimezone(zone).date())
    last_day = max(temperature.dates[-1], log.events[-1].timestamp.astimezone(zone).date())
    span = (
        dt.datetime(first_day.year, first_day.month, first_day.day, tzinfo=zone).astimezone(UTC),
        dt.datetime(last_day.year, last_day.month, last_day.day, tzinfo=zone).astimezone(UTC)
        + dt.timedelta(days=1),
    )
    cmp = period_comparison(log, labels, span, episodes, delay, zone)
    groups = {}
    for scale, gap in (
        (CommonCauseScale.CLASSIC, dt.timedelta(minutes=args.classic_gap_minutes)),
        (CommonCauseScale.HEATWAVE, dt.timedelta(hours=args.heatwave_gap_hours)),
    ):
        found = common_cause_groups(log, gap, scale)
        groups[scale.value] = {
            "max_gap_seconds": gap.total_seconds(),
            "n_groups": len(found),
            "n_grouped_events": sum(len(g.members) for g in found),
            "largest_group": max((len(g.members) for g in found), default=0),
        }
    return {
        "delay_hours": args.delay_hours,
        "n_associated": sum(1 for lab in labels if lab.associated),
        "n_baseline": sum(1 for lab in labels if not lab.associated),
        "span": [span[0].isoformat(), span[1].isoformat()],
        "comparison": comparison_dict(cmp),
        "common_cause": groups,
    }, labels


def cmd_simulate(args) -> int:
    config = SimulationConfig.from_json(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    run = run_heatwave_process(config)
    log = times_to_log(run.times, config.start_date)
    output = Path(args.output)
    if not output.is_absolute() and output.parent == Path("."):
        output = _out_dir(args) / output
    write_fault_log(log, output)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "simulation",
        "config": config.to_dict(),
        "seed": int(config.seed),
        "generator": GENERATOR_NAME,
        "lambda_max": run.lambda_max,
        "n_candidates": run.n_candidates,
        "n_events": len(log),
        "output": os.fspath(output),
    }
    write_json(doc, output.with_name(output.name + ".provenance.json"))
    return 0


def cmd_compare(args) -> int:
    out = _out_dir(args)
    zone = resolve_zone(args.zone)
    months = _month_range(args.months)
    fractions = _fractions(args.cutoffs)
    summaries, samples, inputs = {}, [], {}
    for key, path in (("a", args.log_a), ("b", args.log_b)):
        log = load_fault_log(path, zone)
        if months is not None:
            log = log.filter(lambda e: in_season(e.timestamp.astimezone(zone).date(), months))
        if len(log) < 2:
            raise DataError(f"{path}: need at least 2 fault events, found {len(log)}")
        seq = _tbf_for(log, months, zone)
        summaries[key] = tbf_summary(_analysis(seq, fractions, args.mtbf_hours), seq.segments, fractions)
        samples.append(seq.gaps)
        inputs[key] = {**file_digest(path), "rows": len(log)}
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "comparison",
        "inputs": inputs,
        "config": {
            "zone": args.zone,
            "months": list(months) if months else None,
            "cutoff_fractions": fractions,
            "mtbf_hours_override": args.mtbf_hours,
        },
        "a": summaries["a"],
        "b": summaries["b"],
        "two_sample_ks": two_sample_ks(*samples),
        "excess_difference": [
            {"cutoff_fraction": f, "b_minus_a": pb["excess"] - pa["excess"]}
            for f, pa, pb in zip(fractions, summaries["a"]["excess_profile"], summaries["b"]["excess_profile"])
        ],
        "notes": [LILLIEFORS_NOTE],
    }
    write_json(doc, out / "comparison.json")
    return 0


COMMANDS = {
    "heatwaves": cmd_heatwaves,
    "analyze": cmd_analyze,
    "simulate": cmd_simulate,
    "compare": cmd_compare,
}


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except ParameterError as exc:
        _diag("error", str(exc))
        return EXIT_PARAM
    except DataError as exc:
        _diag("error", str(exc))
        return EXIT_DATA
    except OSError as exc:
        name = getattr(exc, "filename", None)
        _diag("error", f"{exc.strerror or exc}: {name}" if name else str(exc))
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
