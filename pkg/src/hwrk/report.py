"""JSON report assembly, schemas and plot-ready CSV writers."""

from __future__ import annotations

import csv
import datetime as dt
import hashlib
import json
import math
import os
from typing import Sequence

from .attribution import PeriodComparison
from .heatwave_detect import HeatWaveEpisode
from .tbf_stats import DailyCount, TbfAnalysis

SCHEMA_VERSION = "1.0"

KS_CRITICAL_99 = 1.63

_NUM = {"type": "number"}
_NUM_OR_NULL = {"type": ["number", "null"]}
_DATE = {"type": "string", "pattern": r"^\d{4}-\d{2}-\d{2}$"}

_TBF_SUMMARY = {
    "type": "object",
    "required": [
        "n_gaps", "segments", "mtbf_seconds", "mtbf_source", "sample_mtbf_seconds",
        "ks_distance", "ks_critical_99", "excess_profile", "global_excess",
    ],
    "properties": {
        "n_gaps": {"type": "integer", "minimum": 1},
        "segments": {"type": "integer", "minimum": 1},
        "mtbf_seconds": {"type": "number", "exclusiveMinimum": 0},
        "mtbf_source": {"enum": ["sample", "override"]},
        "sample_mtbf_seconds": {"type": "number", "minimum": 0},
        "ks_distance": {"type": "number", "minimum": 0, "maximum": 1},
        "ks_critical_99": _NUM,
        "excess_profile": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["cutoff_seconds", "excess"],
                "properties": {
                    "cutoff_seconds": {"type": "number", "exclusiveMinimum": 0},
                    "cutoff_fraction": _NUM_OR_NULL,
                    "excess": {"type": "number", "minimum": -1, "maximum": 1},
                },
            },
        },
        "global_excess": {"type": "number", "minimum": -1, "maximum": 1},
    },
}

_EPISODE = {
    "type": "object",
    "required": ["start_date", "end_date", "length", "peak_tmax", "magnitude"],
    "properties": {
        "start_date": _DATE,
        "end_date": _DATE,
        "length": {"type": "integer", "minimum": 1},
        "peak_tmax": _NUM,
        "magnitude": _NUM_OR_NULL,
    },
}

_RATE_RATIO = {"oneOf": [{"type": "number"}, {"const": "+inf"}, {"type": "null"}]}

_ATTRIBUTION = {
    "type": ["object", "null"],
    "required": ["delay_hours", "n_associated", "n_baseline", "comparison", "common_cause"],
    "properties": {
        "delay_hours": _NUM,
        "n_associated": {"type": "integer"},
        "n_baseline": {"type": "integer"},
        "comparison": {
            "type": "object",
            "required": ["rate_in", "rate_out", "ratio", "days_in", "days_out"],
            "properties": {
                "rate_in": _NUM_OR_NULL,
                "rate_out": _NUM,
                "ratio": _RATE_RATIO,
                "days_in": _NUM,
                "days_out": _NUM,
            },
        },
        "common_cause": {"type": "object"},
    },
}

ANALYSIS_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "hwrk analysis report",
    "type": "object",
    "required": ["schema_version", "kind", "inputs", "config", "tbf", "daily", "heatwaves", "attribution", "warnings"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "kind": {"const": "analysis"},
        "inputs": {"type": "object"},
        "config": {"type": "object"},
        "tbf": {
            "type": "object",
            "required": ["full", "subperiods"],
            "properties": {
                "full": _TBF_SUMMARY,
                "subperiods": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["months", "summary"],
                        "properties": {
                            "months": {"type": "array", "items": {"type": "integer"}},
                            "summary": {"oneOf": [_TBF_SUMMARY, {"type": "null"}]},
                        },
                    },
                },
            },
        },
        "daily": {
            "type": "object",
            "required": ["n_days", "total_faults", "max_count", "min_count", "high_fault_days"],
            "properties": {
                "high_fault_days": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["date", "day_of_year", "count", "hourly"],
                        "properties": {
                            "date": _DATE,
                            "day_of_year": {"type": "integer"},
                            "count": {"type": "integer"},
                            "hourly": {"type": "array", "items": {"type": "integer"}, "minItems": 24, "maxItems": 24},
                        },
                    },
                }
            },
        },
        "heatwaves": {"type": ["array", "null"], "items": _EPISODE},
        "attribution": _ATTRIBUTION,
        "warnings": {"type": "array", "items": {"type": "string"}},
        "notes": {"type": "array", "items": {"type": "string"}},
    },
}

COMPARISON_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "hwrk comparison report",
    "type": "object",
    "required": ["schema_version", "kind", "inputs", "config", "a", "b", "two_sample_ks"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "kind": {"const": "comparison"},
        "a": _TBF_SUMMARY,
        "b": _TBF_SUMMARY,
        "two_sample_ks": {"type": "number", "minimum": 0, "maximum": 1},
    },
}

HEATWAVES_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "hwrk heat-wave report",
    "type": "object",
    "required": ["schema_version", "kind", "inputs", "config", "ref_stats", "episodes"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "kind": {"const": "heatwaves"},
        "ref_stats": {
            "type": ["object", "null"],
            "properties": {"p25": _NUM, "p75": _NUM},
        },
        "episodes": {"type": "array", "items": _EPISODE},
    },
}

PROVENANCE_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "hwrk simulation provenance",
    "type": "object",
    "required": ["schema_version", "kind", "config", "seed", "generator", "lambda_max", "n_candidates", "n_events"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "kind": {"const": "simulation"},
        "seed": {"type": "integer", "minimum": 0},
        "generator": {"type": "string"},
        "lambda_max": {"type": "number", "exclusiveMinimum": 0},
        "n_candidates": {"type": "integer", "minimum": 0},
        "n_events": {"type": "integer", "minimum": 0},
    },
}

SCHEMAS = {
    "analysis": ANALYSIS_SCHEMA,
    "comparison": COMPARISON_SCHEMA,
    "heatwaves": HEATWAVES_SCHEMA,
    "simulation": PROVENANCE_SCHEMA,
}


def file_digest(path: str | os.PathLike) -> dict:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return {"path": os.fspath(path), "sha256": h.hexdigest()}


def json_number(x):
    """Finite floats pass through; +inf becomes the ``"+inf"`` marker."""
    if x is None:
        return None
    if isinstance(x, float) and math.isinf(x) and x > 0:
        return "+inf"
    return x


def tbf_summary(analysis: TbfAnalysis, segments: int = 1, cutoff_fractions: Sequence[float] | None = None) -> dict:
    profile = []
    for i, p in enumerate(analysis.excess_profile):
        frac = cutoff_fractions[i] if cutoff_fractions is not None else None
        profile.append({"cutoff_seconds": p.cutoff, "cutoff_fraction": frac, "excess": p.excess})
    return {
        "n_gaps": analysis.n_gaps,
        "segments": segments,
        "mtbf_seconds": analysis.mtbf,
        "mtbf_hours": analysis.mtbf / 3600.0,
        "mtbf_source": analysis.mtbf_source,
        "sample_mtbf_seconds": analysis.sample_mtbf,
        "ks_distance": analysis.ks_distance,
        "ks_critical_99": KS_CRITICAL_99 / math.sqrt(analysis.n_gaps),
        "excess_profile": profile,
        "global_excess": analysis.global_excess,
    }


def episode_dict(ep: HeatWaveEpisode) -> dict:
    return {
        "start_date": ep.start_date.isoformat(),
        "end_date": ep.end_date.isoformat(),
        "length": ep.length,
        "peak_tmax": ep.peak_tmax,
        "magnitude": ep.magnitude,
    }


def comparison_dict(cmp: PeriodComparison) -> dict:
    return {
        "n_in": cmp.n_in,
        "n_out": cmp.n_out,
        "days_in": cmp.days_in,
        "days_out": cmp.days_out,
        "rate_in": cmp.rate_in,
        "rate_out": cmp.rate_out,
        "ratio": json_number(cmp.ratio),
    }


def write_json(doc: dict, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2, allow_nan=False)
        fh.write("\n")


def _writer(path):
    fh = open(path, "w", newline="", encoding="utf-8")
    return fh, csv.writer(fh, lineterminator="\n")


def write_curve_csv(analysis: TbfAnalysis, path: str | os.PathLike) -> None:
    """``t_seconds,ecdf,exp_cdf`` at each ECDF support point."""
    t, fe, fx = analysis.curve()
    fh, w = _writer(path)
    with fh:
        w.writerow(["t_seconds", "ecdf", "exp_cdf"])
        for a, b, c in zip(t, fe, fx):
            w.writerow([repr(float(a)), repr(float(b)), repr(float(c))])


def write_daily_csv(counts: Sequence[DailyCount], path: str | os.PathLike, temperatures=None) -> None:
    """``date,count,t_min,t_avg,t_max``; temperature columns are empty when unknown."""
    by_date = {}
    if temperatures is not None:
        by_date = {r.date: r for r in temperatures.records}
    fh, w = _writer(path)
    with fh:
        w.writerow(["date", "count", "t_min", "t_avg", "t_max"])
        for c in counts:
            rec = by_date.get(c.date)
            temps = ["", "", ""] if rec is None else [repr(rec.t_min), repr(rec.t_avg), repr(rec.t_max)]
            w.writerow([c.date.isoformat(), c.count, *temps])


def write_hourly_csv(bins: Sequence[int], path: str | os.PathLike) -> None:
    fh, w = _writer(path)
    with fh:
        w.writerow(["hour", "count"])
        for hour, n in enumerate(bins):
            w.writerow([hour, n])


def write_episodes_csv(episodes: Sequence[HeatWaveEpisode], path: str | os.PathLike) -> None:
    fh, w = _writer(path)
    with fh:
        w.writerow(["start_date", "end_date", "length", "peak_tmax", "magnitude"])
        for ep in episodes:
            mag = "" if ep.magnitude is None else repr(ep.magnitude)
            w.writerow([ep.start_date.isoformat(), ep.end_date.isoformat(), ep.length, repr(ep.peak_tmax), mag])


def day_of_year(day: dt.date) -> int:
    return day.timetuple().tm_yday
