# SPDX-FileCopyrightText: 2024-present crawler-threshold contributors
#
# SPDX-License-Identifier: MIT

from .__about__ import __version__
from .arrivals import (
    ArrivalStats,
    BatchProcess,
    ModedArrival,
    ValidationMode,
    arrival_stats,
    batch_map,
    compose_bmmap,
    compose_direct,
    compose_independent,
    compose_scaled,
    compose_thinned,
    validate_bmap,
)
from .config import config
from .distributions import (
    PhaseType,
    ph_constant_mean_hyperexponential,
    ph_erlang,
    ph_exponential,
    ph_hyperexponential,
    ph_mean,
    ph_moment,
    ph_scale,
    ph_scv,
    ph_variance,
    validate_ph,
)
from .errors import (
    ArrivalProcessError,
    CrawlerThresholdError,
    DegenerateChainError,
    DimensionError,
    IncompleteReportError,
    IrreparableModelError,
    ModelError,
    ModelFileError,
    PhaseTypeError,
    PolicyError,
    SingularMatrixError,
    StateSpaceError,
    StationarySolutionError,
    TraceError,
    WrongSolverError,
)
from .evaluate_policy import evaluate_policy
from .generator import BlockGenerator, QueueModel, assemble_dense, build_generator
from .measures import PerformanceReport, performance_report
from .model_file import LoadedModel, dump_model, load_model, packaged_model
from .optimizer import (
    CostCoefficients,
    OptimizationResult,
    cost,
    fixed_mode_costs,
    optimize,
    relative_profit,
    sweep,
    threshold_curves,
)
from .policy import (
    ThresholdPolicy,
    active_mode,
    enumerate_policies,
    format_policy,
    normalize_policy,
    parse_policy,
    subset_thresholds,
)
from .simulator import SimConfig, SimReport, sample_ph, simulate
from .sojourn import SojournSummary, mean_sojourns, sojourn_lst
from .stationary_solver import SolverMethod, StationarySolution, solve
from .trace_ingest import (
    TraceStats,
    batchify,
    censor,
    empirical_stats,
    ingest,
    interarrivals,
    read_timestamps,
)
from .validate import validate

__all__ = [
    "__version__",
    "config",
    "PhaseType",
    "validate_ph",
    "ph_moment",
    "ph_mean",
    "ph_variance",
    "ph_scv",
    "ph_scale",
    "ph_exponential",
    "ph_erlang",
    "ph_hyperexponential",
    "ph_constant_mean_hyperexponential",
    "BatchProcess",
    "ModedArrival",
    "ArrivalStats",
    "ValidationMode",
    "validate_bmap",
    "arrival_stats",
    "batch_map",
    "compose_direct",
    "compose_independent",
    "compose_thinned",
    "compose_bmmap",
    "compose_scaled",
    "ThresholdPolicy",
    "active_mode",
    "enumerate_policies",
    "normalize_policy",
    "parse_policy",
    "format_policy",
    "subset_thresholds",
    "QueueModel",
    "BlockGenerator",
    "build_generator",
    "assemble_dense",
    "SolverMethod",
    "StationarySolution",
    "solve",
    "PerformanceReport",
    "performance_report",
    "SojournSummary",
    "sojourn_lst",
    "mean_sojourns",
    "evaluate_policy",
    "CostCoefficients",
    "OptimizationResult",
    "cost",
    "relative_profit",
    "optimize",
    "fixed_mode_costs",
    "threshold_curves",
    "sweep",
    "SimConfig",
    "SimReport",
    "sample_ph",
    "simulate",
    "TraceStats",
    "interarrivals",
    "censor",
    "batchify",
    "empirical_stats",
    "read_timestamps",
    "ingest",
    "LoadedModel",
    "load_model",
    "dump_model",
    "packaged_model",
    "validate",
    "CrawlerThresholdError",
    "DimensionError",
    "SingularMatrixError",
    "DegenerateChainError",
    "ModelError",
    "PhaseTypeError",
    "ArrivalProcessError",
    "IrreparableModelError",
    "PolicyError",
    "StateSpaceError",
    "WrongSolverError",
    "StationarySolutionError",
    "IncompleteReportError",
    "TraceError",
    "ModelFileError",
]
