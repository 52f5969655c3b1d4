"""Synthetic fault processes: a homogeneous Poisson baseline and a heat-driven
non-homogeneous process with fatigue accumulation and delayed response.

Time ``t`` is measured in days from midnight (UTC) of the first simulated day;
day ``d`` covers ``[d, d + 1)``. Each day contributes fresh damage
``kappa * max(0, t_max(d) - T*)`` released at ``t = d`` and spread forward in
time by a gamma delay kernel ``g``. The hazard is

    lambda(t) = lambda0 * (1 + beta * sum_{d <= t} fresh(d) * g(t - d))

and is sampled by Lewis-Shedler thinning under a constant bound that dominates
``lambda`` on every day of the horizon.

Randomness comes from numpy's counter-based Philox generator. One
``SeedSequence`` per seed is split into independent child streams for
candidate arrivals, thinning decisions and synthetic temperature noise.
"""

from __future__ import annotations

import datetime as dt
import json
import math
import os
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import stats
from scipy.integrate import trapezoid

from .errors import DataError, ParameterError
from .io_ingest import UTC, FaultEvent, FaultLog, TemperatureSeries, load_temperature_series

GENERATOR_NAME = "numpy.random.Philox (SeedSequence-spawned streams)"
SECONDS_PER_DAY = 86400.0

_STREAM_ARRIVALS = 0
_STREAM_THINNING = 1
_STREAM_TEMPERATURE = 2


def _streams(seed: int) -> list[np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(3)
    return [np.random.Generator(np.random.Philox(c)) for c in children]


def _check_seed(seed):
    if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool) or not 0 <= seed < 2**64:
        raise ParameterError(f"seed must be an integer in [0, 2**64), got {seed!r}")


@dataclass(frozen=True)
class FatigueParams:
    trigger_temp: float = 30.0
    accumulation: float = 0.1
    recovery_time: float = 5.0

    def __post_init__(self):
        if not math.isfinite(self.trigger_temp):
            raise ParameterError("trigger_temp must be finite")
        if not (self.accumulation >= 0 and math.isfinite(self.accumulation)):
            raise ParameterError("accumulation must be non-negative")
        if not (self.recovery_time > 0 and math.isfinite(self.recovery_time)):
            raise ParameterError("recovery_time must be positive")


@dataclass(frozen=True)
class DelayKernel:
    """Gamma density with the given shape and mean (days)."""

    shape: float = 2.0
    mean: float = 1.5

    def __post_init__(self):
        if not (self.shape > 0 and math.isfinite(self.shape)):
            raise ParameterError("delay shape must be positive")
        if not (self.mean > 0 and math.isfinite(self.mean)):
            raise ParameterError("delay mean must be positive")

    @property
    def scale(self) -> float:
        return self.mean / self.shape

    @property
    def mode(self) -> float:
        return self.scale * (self.shape - 1) if self.shape >= 1 else 0.0

    def pdf(self, s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        pos = s >= 0
        out[pos] = stats.gamma.pdf(s[pos], a=self.shape, scale=self.scale)
        return out

    def interval_max(self, n: int) -> np.ndarray:
        """sup of the density over [m, m + 1] for m = 0..n-1."""
        m = np.arange(n, dtype=float)
        ends = np.maximum(self.pdf(m), self.pdf(m + 1))
        if self.shape < 1:
            ends[0] = np.inf
        else:
            mode = self.mode
            inside = (m <= mode) & (mode <= m + 1)
            ends[inside] = self.pdf(np.array([mode]))[0]
        return ends


@dataclass(frozen=True)
class HeatWaveSpec:
    start: int
    length: int
    boost: float


@dataclass(frozen=True)
class SyntheticProfile:
    """Seasonal sinusoid for daily maxima plus injected heat-wave boosts.

    ``t_avg`` and ``t_min`` sit ``diurnal_range / 2`` and ``diurnal_range``
    below ``t_max``.
    """

    base: float = 24.0
    amplitude: float = 0.0
    phase: float = 0.0
    waves: tuple[HeatWaveSpec, ...] = ()
    noise_sd: float = 0.0
    diurnal_range: float = 10.0

    def __post_init__(self):
        object.__setattr__(
            self, "waves", tuple(w if isinstance(w, HeatWaveSpec) else HeatWaveSpec(**w) for w in self.waves)
        )
        if self.noise_sd < 0 or self.diurnal_range < 0:
            raise ParameterError("noise_sd and diurnal_range must be non-negative")


def synthetic_temperature(
    profile: SyntheticProfile,
    horizon: int,
    seed: int | None = None,
    start_date: dt.date = dt.date(2017, 1, 1),
    area_id: str = "synthetic",
) -> TemperatureSeries:
    """Daily series of ``horizon`` days; noise is drawn only when ``noise_sd > 0``."""
    if horizon < 0:
        raise ParameterError("horizon must be non-negative")
    d = np.arange(horizon, dtype=float)
    t_max = profile.base + profile.amplitude * np.sin(2 * np.pi * (d - profile.phase) / 365.0)
    for w in profile.waves:
        if w.length < 1:
            raise ParameterError(f"heat wave length must be >= 1, got {w.length}")
        if w.start < 0 or w.start + w.length > horizon:
            raise ParameterError(f"heat wave {w} lies outside the {horizon}-day horizon")
        t_max[w.start : w.start + w.length] += w.boost
    if profile.noise_sd > 0:
        if seed is None:
            raise ParameterError("a seed is required when noise_sd > 0")
        rng = _streams(seed)[_STREAM_TEMPERATURE]
        t_max = t_max + rng.normal(0.0, profile.noise_sd, size=horizon)
    dates = [start_date + dt.timedelta(days=i) for i in range(horizon)]
    rng_half = profile.diurnal_range / 2
    return TemperatureSeries.from_arrays(
        area_id, dates, t_max - profile.diurnal_range, t_max, t_max - rng_half
    )


@dataclass(frozen=True, eq=False)
class FatigueState:
    """Per-day fresh damage and the accumulated, slowly recovering damage level."""

    dates: list
    fresh: np.ndarray
    damage: np.ndarray

    def __len__(self) -> int:
        return self.fresh.size


def fatigue_trajectory(temps: TemperatureSeries, params: FatigueParams) -> FatigueState:
    """D(d) = D(d-1) * exp(-1/recovery_time) + kappa * max(0, t_max(d) - T*), D(-1) = 0."""
    if not temps.is_contiguous():
        raise DataError("temperature series has gaps; fatigue needs consecutive days")
    fresh = params.accumulation * np.maximum(0.0, temps.t_max - params.trigger_temp)
    decay = math.exp(-1.0 / params.recovery_time)
    damage = np.empty_like(fresh)
    level = 0.0
    for i, f in enumerate(fresh):
        level = level * decay + f
        damage[i] = level
    return FatigueState(list(temps.dates), fresh, damage)


def damage_response(t, fatigue: FatigueState, kernel: DelayKernel) -> np.ndarray:
    """R(t) = sum over days d <= t of fresh(d) * g(t - d)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    days = np.flatnonzero(fatigue.fresh > 0)
    out = np.zeros(t.size)
    if days.size == 0:
        return out
    amp = fatigue.fresh[days]
    block = max(1, 2_000_000 // days.size)
    for lo in range(0, t.size, block):
        lag = t[lo : lo + block, None] - days[None, :]
        out[lo : lo + block] = kernel.pdf(lag) @ amp
    return out


def hazard_rate(t, fatigue: FatigueState, kernel: DelayKernel, beta: float, lam0: float):
    """Intensity (faults/day) at time(s) ``t`` in days; the horizon is ``len(fatigue)`` days."""
    if lam0 <= 0:
        raise ParameterError("baseline rate must be positive")
    if beta < 0:
        raise ParameterError("hazard gain must be non-negative")
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0) or np.any(arr > len(fatigue)):
        raise ParameterError(f"t outside the {len(fatigue)}-day horizon")
    lam = lam0 * (1.0 + beta * damage_response(arr, fatigue, kernel))
    return float(lam[0]) if arr.ndim == 0 else lam.reshape(arr.shape)


def hazard_bound(
    fatigue: FatigueState, kernel: DelayKernel, beta: float, lam0: float, horizon: float
) -> float:
    """Constant rate dominating lambda(t) on [0, horizon].

    On day j the response is bounded by sum_d fresh(d) * sup g on [j-d, j-d+1].
    """
    n = int(math.ceil(horizon))
    fresh = fatigue.fresh[:n]
    if beta == 0 or not np.any(fresh > 0):
        return float(lam0)
    gmax = kernel.interval_max(n)
    if not np.all(np.isfinite(gmax)):
        raise ParameterError("hazard is unbounded (delay shape < 1 puts infinite density at zero lag)")
    bound = np.convolve(fresh, gmax)[:n]
    lam_max = lam0 * (1.0 + beta * float(np.max(bound)))
    if not math.isfinite(lam_max):
        raise ParameterError("hazard bound is not finite")
    return lam_max


def _arrivals(rng: np.random.Generator, rate: float, horizon: float) -> np.ndarray:
    """Homogeneous Poisson arrival times on (0, horizon) via exponential gaps."""
    if horizon <= 0:
        return np.empty(0)
    expected = rate * horizon
    chunk = int(expected + 6 * math.sqrt(expected) + 16)
    parts = []
    t0 = 0.0
    while True:
        c = t0 + np.cumsum(rng.exponential(1.0 / rate, size=chunk))
        inside = c[c < horizon]
        parts.append(inside)
        if inside.size < c.size:
            break
        t0 = float(c[-1])
    return np.concatenate(parts)


def times_to_log(times_days: np.ndarray, start_date: dt.date) -> FaultLog:
    """Event times in days to a log; instants are floored to whole seconds."""
    origin = dt.datetime(start_date.year, start_date.month, start_date.day, tzinfo=UTC)
    secs = np.floor(np.asarray(times_days) * SECONDS_PER_DAY).astype(np.int64)
    return FaultLog(tuple(FaultEvent(origin + dt.timedelta(seconds=int(s))) for s in secs))


def simulate_baseline_times(lam0: float, horizon: float, seed: int) -> np.ndarray:
    if not (lam0 > 0 and math.isfinite(lam0)):
        raise ParameterError(f"baseline rate must be positive, got {lam0}")
    if not (horizon >= 0 and math.isfinite(horizon)):
        raise ParameterError(f"horizon must be non-negative, got {horizon}")
    _check_seed(seed)
    return _arrivals(_streams(seed)[_STREAM_ARRIVALS], lam0, horizon)


def simulate_baseline(
    lam0: float, horizon: float, seed: int, start_date: dt.date = dt.date(2017, 1, 1)
) -> FaultLog:
    """Homogeneous Poisson fault log with rate ``lam0`` per day over ``horizon`` days."""
    return times_to_log(simulate_baseline_times(lam0, horizon, seed), start_date)


@dataclass(frozen=True)
class SimulationConfig:
    baseline_rate: float = 1.0
    horizon: float = 365.0
    seed: int = 0
    fatigue: FatigueParams = field(default_factory=FatigueParams)
    delay_kernel: DelayKernel = field(default_factory=DelayKernel)
    hazard_gain: float = 0.0
    temperature: SyntheticProfile | TemperatureSeries = field(default_factory=SyntheticProfile)
    start_date: dt.date = dt.date(2017, 1, 1)

    def __post_init__(self):
        if not (self.baseline_rate > 0 and math.isfinite(self.baseline_rate)):
            raise ParameterError("baseline_rate must be positive")
        if not (self.horizon > 0 and math.isfinite(self.horizon)):
            raise ParameterError("horizon must be positive")
        if not (self.hazard_gain >= 0 and math.isfinite(self.hazard_gain)):
            raise ParameterError("hazard_gain must be non-negative")
        _check_seed(self.seed)

    @property
    def horizon_days(self) -> int:
        return int(math.ceil(self.horizon))

    def temperature_series(self) -> TemperatureSeries:
        n = self.horizon_days
        if isinstance(self.temperature, SyntheticProfile):
            return synthetic_temperature(self.temperature, n, self.seed, self.start_date)
        series = self.temperature.between(self.start_date)
        if len(series) < n or series.dates[0] != self.start_date:
            raise ParameterError(
                f"temperature series must cover {n} days from {self.start_date}"
            )
        return type(series)(series.area_id, series.records[:n])

    @classmethod
    def from_dict(cls, doc: dict, base_dir: str | os.PathLike = ".") -> "SimulationConfig":
        doc = dict(doc)
        try:
            kwargs = {}
            for key in ("baseline_rate", "horizon", "hazard_gain"):
                if key in doc:
                    kwargs[key] = float(doc.pop(key))
            if "seed" in doc:
                kwargs["seed"] = doc.pop("seed")
            if "fatigue" in doc:
                kwargs["fatigue"] = FatigueParams(**doc.pop("fatigue"))
            if "delay_kernel" in doc:
                kwargs["delay_kernel"] = DelayKernel(**doc.pop("delay_kernel"))
            if "start_date" in doc:
                kwargs["start_date"] = dt.date.fromisoformat(doc.pop("start_date"))
            if "temperature" in doc:
                temp = doc.pop("temperature")
                if "csv" in temp:
                    kwargs["temperature"] = load_temperature_series(
                        os.path.join(base_dir, temp["csv"]), temp.get("area_id", "")
                    )
                else:
                    prof = dict(temp.get("profile", temp))
                    prof["waves"] = tuple(HeatWaveSpec(**w) for w in prof.get("waves", ()))
                    kwargs["temperature"] = SyntheticProfile(**prof)
        except (TypeError, ValueError, KeyError) as exc:
            if isinstance(exc, ParameterError):
                raise
            raise ParameterError(f"invalid simulation config: {exc}") from exc
        if doc:
            raise ParameterError(f"unknown config field(s): {', '.join(sorted(doc))}")
        return cls(**kwargs)

    @classmethod
    def from_json(cls, path: str | os.PathLike) -> "SimulationConfig":
        with open(path, encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ParameterError(f"{path}: invalid JSON: {exc}") from exc
        return cls.from_dict(doc, base_dir=os.path.dirname(os.fspath(path)))

    def to_dict(self) -> dict:
        out = {
            "baseline_rate": self.baseline_rate,
            "horizon": self.horizon,
            "seed": int(self.seed),
            "fatigue": asdict(self.fatigue),
            "delay_kernel": asdict(self.delay_kernel),
            "hazard_gain": self.hazard_gain,
            "start_date": self.start_date.isoformat(),
        }
        if isinstance(self.temperature, SyntheticProfile):
            out["temperature"] = {"profile": asdict(self.temperature)}
        else:
            out["temperature"] = {"series": self.temperature.area_id, "days": len(self.temperature)}
        return out


class SimulationRun(NamedTuple):
    times: np.ndarray
    lambda_max: float
    n_candidates: int
    fatigue: FatigueState


def thinning(intensity, lam_max: float, horizon: float, seed: int) -> tuple[np.ndarray, int]:
    """Non-homogeneous Poisson times on (0, horizon) for ``intensity <= lam_max``.

    Candidates arrive at rate ``lam_max``; each is kept with probability
    ``intensity(t) / lam_max``. Returns the kept times and the candidate count.
    """
    if not (lam_max > 0 and math.isfinite(lam_max)):
        raise ParameterError(f"dominating rate must be positive and finite, got {lam_max}")
    _check_seed(seed)
    streams = _streams(seed)
    cand = _arrivals(streams[_STREAM_ARRIVALS], lam_max, horizon)
    u = streams[_STREAM_THINNING].random(cand.size)
    lam = np.asarray(intensity(cand), dtype=float) if cand.size else np.empty(0)
    if np.any(lam > lam_max * (1 + 1e-12)):
        raise ParameterError("intensity exceeds its dominating rate")
    return cand[u * lam_max < lam], int(cand.size)


def run_heatwave_process(config: SimulationConfig) -> SimulationRun:
    """Thinning run; returns event times in days plus diagnostics."""
    temps = config.temperature_series()
    fatigue = fatigue_trajectory(temps, config.fatigue)
    lam0, beta, kernel = config.baseline_rate, config.hazard_gain, config.delay_kernel
    lam_max = hazard_bound(fatigue, kernel, beta, lam0, config.horizon)
    times, n_cand = thinning(
        lambda t: hazard_rate(t, fatigue, kernel, beta, lam0), lam_max, config.horizon, config.seed
    )
    return SimulationRun(times, lam_max, n_cand, fatigue)


def simulate_heatwave_process(config: SimulationConfig) -> FaultLog:
    """Heat-modulated fault log: Lewis-Shedler thinning of a rate-lambda_max process."""
    return times_to_log(run_heatwave_process(config).times, config.start_date)


def expected_count(config: SimulationConfig, points_per_day: int = 2000) -> float:
    """Mean measure of the process over the horizon, by the composite trapezoid rule."""
    temps = config.temperature_series()
    fatigue = fatigue_trajectory(temps, config.fatigue)
    grid = np.linspace(0.0, config.horizon, int(config.horizon * points_per_day) + 1)
    lam = hazard_rate(grid, fatigue, config.delay_kernel, config.hazard_gain, config.baseline_rate)
    return float(trapezoid(lam, grid))


def mean_hazard(config: SimulationConfig, start: float, end: float, points_per_day: int = 2000) -> float:
    """Average intensity over [start, end] days."""
    temps = config.temperature_series()
    fatigue = fatigue_trajectory(temps, config.fatigue)
    grid = np.linspace(start, end, int((end - start) * points_per_day) + 1)
    lam = hazard_rate(grid, fatigue, config.delay_kernel, config.hazard_gain, config.baseline_rate)
    return float(trapezoid(lam, grid) / (end - start))


def peak_lag(driver, response, max_lag: int) -> int:
    """Lag (in samples, -max_lag..max_lag) maximising the demeaned cross-covariance
    sum_i (driver[i] - mean) * (response[i + lag] - mean)."""
    x = np.asarray(driver, dtype=float)
    y = np.asarray(response, dtype=float)
    if x.shape != y.shape:
        raise DataError("driver and response must have the same length")
    x = x - x.mean()
    y = y - y.mean()
    n = x.size
    best_lag, best = 0, -np.inf
    for lag in range(-max_lag, max_lag + 1):
        if lag >= 0:
            c = float(np.dot(x[: n - lag], y[lag:]))
        else:
            c = float(np.dot(x[-lag:], y[: n + lag]))
        if c > best:
            best_lag, best = lag, c
    return best_lag
