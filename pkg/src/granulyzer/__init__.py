"""Granularity analysis of task-scheduling overhead under strong scaling."""

from .calibration import (
    CrossoverPrediction,
    GranularityAnalyzer,
    KernelModel,
    KernelRegressor,
    OverheadForm,
    OverheadModel,
    OverheadRegressor,
    ScalingSample,
    fit_kernel,
    fit_overhead,
    granularity_curve,
    pre_collapse_filter,
    predict_crossover,
)
from .decision import ScheduleSelector, Verdict, decide, dynamic_time_hat, static_time, static_time_fft
from .model import (
    Mode,
    PhaseParams,
    PhaseTiming,
    Regime,
    classify_regime,
    decay_exponent,
    exposed_overhead,
    granularity,
    overhead_fraction_percent,
    overhead_ratio,
    phase_time,
)
from .simulator import ExecutionTrace, SimConfig, run_sweep, simulate
from .topology import TaskGraph, TaskId, TopologyClass, build_task_graph, edge_count, neighborhood
from .workloads import PRESET_NAMES, WorkloadSpec, kernel_time, preset

__version__ = "0.1.0"
