from dataclasses import replace
from typing import Union

from .generator import QueueModel, build_generator
from .measures import PerformanceReport, performance_report
from .policy import ThresholdPolicy
from .sojourn import mean_sojourns
from .stationary_solver import SolverMethod, solve


def evaluate_policy(
    model: QueueModel,
    pol: ThresholdPolicy,
    solver: Union[str, SolverMethod] = "auto",
) -> PerformanceReport:
    """Build, solve and measure one policy, sojourn means included."""
    sol = solve(build_generator(model, pol), solver)
    report = performance_report(sol, model, pol)
    means = mean_sojourns(model, pol, sol, report)
    return replace(report, v_bar=means.v_bar, v1_bar=means.v1_bar, v2_bar=means.v2_bar)
