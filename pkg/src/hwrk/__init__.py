"""Heat-wave impact analytics for distribution-grid fault logs.

Detect heat-wave episodes from daily temperatures, compare the time between
failures of a fault log with the exponential model of independent faults, and
simulate fault processes whose hazard responds to heat with fatigue and delay.
"""

__version__ = "0.1.0"

from .attribution import (
    CommonCauseGroup,
    CommonCauseScale,
    FaultLabel,
    PeriodComparison,
    associate_faults,
    common_cause_groups,
    period_comparison,
)
from .errors import DataError, HwrkError, IngestError, ParameterError
from .failure_sim import (
    DelayKernel,
    FatigueParams,
    FatigueState,
    HeatWaveSpec,
    SimulationConfig,
    SyntheticProfile,
    fatigue_trajectory,
    hazard_rate,
    simulate_baseline,
    simulate_heatwave_process,
    synthetic_temperature,
)
from .heatwave_detect import (
    HeatWaveEpisode,
    RefStats,
    ThresholdTable,
    annual_max_quartiles,
    build_thresholds,
    detect_heatwaves,
    episode_magnitude,
)
from .io_ingest import (
    FaultEvent,
    FaultLog,
    TemperatureRecord,
    TemperatureSeries,
    load_fault_log,
    load_temperature_series,
)
from .tbf_stats import (
    TbfAnalysis,
    TbfSequence,
    analyze_tbf,
    compute_tbf,
    daily_fault_counts,
    ecdf,
    exponential_cdf,
    high_fault_days,
    hourly_histogram,
    ks_distance,
    mtbf,
    short_tbf_excess,
)
