"""Cost criterion and exhaustive threshold-policy search."""

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import partial
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple, Union

import dask
import numpy as np
import pandas as pd

from .config import config
from .distributions import (
    ph_constant_mean_hyperexponential,
    ph_mean,
    ph_scale,
    ph_scv,
)
from .errors import CrawlerThresholdError, IncompleteReportError, StateSpaceError
from .evaluate_policy import evaluate_policy
from .generator import QueueModel
from .measures import PerformanceReport
from .policy import (
    ThresholdPolicy,
    enumerate_policies,
    format_policy,
    policy_sort_key,
    subset_thresholds,
)
from .rich_dask_progress import SearchProgress, SearchProgressCallback

logger = logging.getLogger(__name__)

sweep_parameters = [
    ("K", "K"),
    ("SCALE_SERVICE", "scale-service"),
    ("SCALE_OBSOLESCENCE", "scale-obsolescence"),
    ("SERVICE_VARIANCE", "service-variance"),
    ("OBSOLESCENCE_VARIANCE", "obsolescence-variance"),
]
sweep_parameters_values = [p[1] for p in sweep_parameters]
SweepParameter = Enum("SweepParameter", sweep_parameters)

Progress = Optional[Union[SearchProgress, SearchProgressCallback]]


@dataclass(frozen=True)
class CostCoefficients:
    c_loss: float
    c_obs: float
    a: float
    c_rob: float
    c_star: float

    def __post_init__(self):
        negative = {k: v for k, v in self.as_dict().items() if v < 0}
        if negative:
            msg = f"Cost coefficients must be nonnegative, got {negative}"
            raise ValueError(msg)

    def as_dict(self) -> Dict[str, float]:
        return {
            "c_loss": self.c_loss,
            "c_obs": self.c_obs,
            "a": self.a,
            "c_rob": self.c_rob,
            "c_star": self.c_star,
        }


def cost(report: PerformanceReport, coeff: CostCoefficients) -> float:
    """J = λ(c_loss·P_loss + c_obs·P_obs) + a·V̄¹ + c_rob·N_act + c_star·P_star."""
    if not report.is_complete:
        msg = "The report lacks sojourn means; evaluate it with evaluate_policy"
        raise IncompleteReportError(msg)
    value = report.arrival_rate * (coeff.c_loss * report.p_loss + coeff.c_obs * report.p_obs)
    if coeff.a:
        value += coeff.a * report.v1_bar
    value += coeff.c_rob * report.n_act + coeff.c_star * report.p_star
    return float(value)


def relative_profit(best_J: float, fixed_costs: Sequence[float]) -> float:
    """Percentage saved by threshold control over the best fixed mode."""
    return (1.0 - best_J / min(fixed_costs)) * 100.0


@dataclass(frozen=True)
class SubsetResult:
    subset: Tuple[int, ...]
    policy: Optional[ThresholdPolicy]
    cost: float
    n_policies: int


@dataclass
class OptimizationResult:
    best_policy: Optional[ThresholdPolicy]
    best_cost: float
    table: List[SubsetResult] = field(default_factory=list)
    fixed_costs: Dict[int, float] = field(default_factory=dict)
    relative_profit: float = float("nan")
    evaluations: Dict[ThresholdPolicy, float] = field(default_factory=dict, repr=False)
    skipped: List[str] = field(default_factory=list)

    def to_dataframe(self) -> pd.DataFrame:
        rows = []
        for row in self.table:
            pol = row.policy
            rows.append(
                {
                    "subset": _join(row.subset),
                    "modes": _join(pol.modes) if pol else "",
                    "thresholds": _join(pol.thresholds) if pol else "",
                    "subset_thresholds": _join(subset_thresholds(pol, row.subset))
                    if pol
                    else "",
                    "J": row.cost,
                }
            )
        return pd.DataFrame(
            rows, columns=["subset", "modes", "thresholds", "subset_thresholds", "J"]
        )


def _join(values: Sequence[int]) -> str:
    return ",".join(str(v) for v in values)


def _policy_cost(
    model: QueueModel, coeff: CostCoefficients, solver: str, pol: ThresholdPolicy
) -> Tuple[float, Optional[str]]:
    try:
        return cost(evaluate_policy(model, pol, solver), coeff), None
    except CrawlerThresholdError as exc:
        return float("nan"), str(exc)


def _compute_kwargs() -> dict:
    kwargs = {"scheduler": config.scheduler}
    if config.scheduler in ("threads", "processes"):
        kwargs["num_workers"] = config.num_workers
    return kwargs


def evaluate_costs(
    model: QueueModel,
    policies: Sequence[ThresholdPolicy],
    coeff: CostCoefficients,
    solver: str = "auto",
    progress: Progress = None,
) -> Tuple[Dict[ThresholdPolicy, float], List[str]]:
    """Cost of every distinct policy, evaluated in parallel and folded in
    canonical order. Policies whose evaluation fails are reported as skipped."""
    model.check_size()
    # Populate the shared per-level blocks before the workers read them
    model.phase_generator(0)
    ordered = sorted(set(policies), key=policy_sort_key)
    evaluate = partial(_policy_cost, model, coeff, solver)
    tasks = [dask.delayed(evaluate)(pol) for pol in ordered]
    if isinstance(progress, SearchProgressCallback):
        progress.add_callback_task(f"[green]Evaluating {len(ordered)} policies (K={model.K})")
    results = dask.compute(*tasks, **_compute_kwargs())
    costs: Dict[ThresholdPolicy, float] = {}
    skipped: List[str] = []
    for pol, (value, reason) in zip(ordered, results):
        if reason is not None:
            logger.warning("Skipped policy %s: %s", pol, reason)
            skipped.append(f"{pol}: {reason}")
            continue
        costs[pol] = value
    return costs, skipped


def _argmin(policies: Sequence[ThresholdPolicy], costs: Dict[ThresholdPolicy, float]):
    best, best_cost = None, math.inf
    for pol in sorted(policies, key=policy_sort_key):
        value = costs.get(pol)
        if value is not None and value < best_cost:
            best, best_cost = pol, value
    return best, best_cost


def resolve_subsets(
    subsets: Union[str, Sequence[Sequence[int]]], N: int
) -> List[Tuple[int, ...]]:
    """Mode subsets as descending tuples, ordered by size then lexicographically."""
    if isinstance(subsets, str):
        if subsets != "all":
            msg = f"Expected 'all' or a list of mode subsets, got {subsets!r}"
            raise ValueError(msg)
        chosen = [c for s in range(1, N + 1) for c in combinations(range(1, N + 1), s)]
    else:
        chosen = list(subsets)
    result = set()
    for subset in chosen:
        modes = tuple(sorted(set(subset), reverse=True))
        if not modes or modes[0] > N or modes[-1] < 1:
            msg = f"Mode subset {subset} is not within 1..{N}"
            raise ValueError(msg)
        result.add(modes)
    return sorted(result, key=lambda m: (len(m), m))


def optimize(
    model: QueueModel,
    coeff: CostCoefficients,
    subsets: Union[str, Sequence[Sequence[int]]] = "all",
    K: Optional[int] = None,
    allow_skip: bool = True,
    solver: str = "auto",
    progress: Progress = None,
) -> OptimizationResult:
    """Exhaustive search over threshold policies for each mode subset.

    Within a subset the first and last modes are always used; with
    ``allow_skip`` the intermediate ones may be left out."""
    if K is not None and K != model.K:
        model = replace(model, K=K)
    subset_list = resolve_subsets(subsets, model.N)
    try:
        model.check_size()
    except StateSpaceError as exc:
        logger.warning("Skipped K=%d: %s", model.K, exc)
        return OptimizationResult(best_policy=None, best_cost=float("nan"), skipped=[str(exc)])

    candidates = {
        subset: enumerate_policies(subset, model.K, allow_skip=allow_skip)
        for subset in subset_list
    }
    fixed = {r: ThresholdPolicy(K=model.K, modes=(r,)) for r in range(1, model.N + 1)}
    unique = set(fixed.values())
    for policies in candidates.values():
        unique.update(policies)
    costs, skipped = evaluate_costs(model, list(unique), coeff, solver, progress)

    table = []
    for subset in subset_list:
        pol, value = _argmin(candidates[subset], costs)
        table.append(
            SubsetResult(
                subset=subset,
                policy=pol,
                cost=value if pol else float("nan"),
                n_policies=len(candidates[subset]),
            )
        )
    searched = [row.policy for row in table if row.policy is not None]
    best, best_cost = _argmin(searched, costs)
    fixed_costs = {r: costs.get(pol, float("nan")) for r, pol in fixed.items()}
    finite = [c for c in fixed_costs.values() if np.isfinite(c)]
    profit = relative_profit(best_cost, finite) if best and finite else float("nan")
    return OptimizationResult(
        best_policy=best,
        best_cost=best_cost if best else float("nan"),
        table=table,
        fixed_costs=fixed_costs,
        relative_profit=profit,
        evaluations=costs,
        skipped=skipped,
    )


def fixed_mode_costs(
    model: QueueModel, coeff: CostCoefficients, solver: str = "auto"
) -> Dict[int, float]:
    """C_r: cost with r robots always active."""
    policies = [ThresholdPolicy(K=model.K, modes=(r,)) for r in range(1, model.N + 1)]
    costs, _ = evaluate_costs(model, policies, coeff, solver)
    return {pol.modes[0]: costs.get(pol, float("nan")) for pol in policies}


def threshold_curves(
    model: QueueModel,
    coeff: CostCoefficients,
    pairs: Sequence[Sequence[int]],
    solver: str = "auto",
    progress: Progress = None,
) -> pd.DataFrame:
    """J against the single threshold of two-mode policies, one series per pair."""
    policies = []
    for pair in pairs:
        high, low = sorted(set(pair), reverse=True)
        policies.extend(
            ThresholdPolicy(K=model.K, modes=(high, low), thresholds=(t,))
            for t in range(model.K)
        )
    costs, _ = evaluate_costs(model, policies, coeff, solver, progress)
    rows = [
        {
            "modes": _join(pol.modes),
            "threshold": pol.thresholds[0],
            "J": costs.get(pol, float("nan")),
        }
        for pol in policies
    ]
    return pd.DataFrame(rows, columns=["modes", "threshold", "J"])


def vary_model(
    model: QueueModel, parameter: Union[str, SweepParameter], value: float
) -> QueueModel:
    """The model with one parameter replaced."""
    if isinstance(parameter, str):
        parameter = SweepParameter(parameter)
    if parameter is SweepParameter.K:
        return replace(model, K=int(value))
    if parameter is SweepParameter.SCALE_SERVICE:
        return replace(model, service=ph_scale(model.service, value))
    if parameter is SweepParameter.SCALE_OBSOLESCENCE:
        return replace(model, obsolescence=ph_scale(model.obsolescence, value))
    if parameter is SweepParameter.SERVICE_VARIANCE:
        service = ph_constant_mean_hyperexponential(ph_mean(model.service), value)
        return replace(model, service=service)
    obsolescence = ph_constant_mean_hyperexponential(ph_mean(model.obsolescence), value)
    return replace(model, obsolescence=obsolescence)


def sweep(
    model: QueueModel,
    coeff: CostCoefficients,
    parameter: Union[str, SweepParameter],
    values: Sequence[float],
    subsets: Union[str, Sequence[Sequence[int]]] = "all",
    allow_skip: bool = True,
    solver: str = "auto",
    progress: Progress = None,
) -> pd.DataFrame:
    """Optimize once per parameter value; one row per value."""
    if isinstance(parameter, str):
        parameter = SweepParameter(parameter)
    name = parameter.value
    if isinstance(progress, SearchProgress):
        progress.add_sweep_task(f"[green]Sweeping {name}", len(values))
    fixed_columns = [f"C{r}" for r in range(1, model.N + 1)]
    rows = []
    for index, value in enumerate(values):
        row = {name: value}
        try:
            variant = vary_model(model, parameter, value)
        except CrawlerThresholdError as exc:
            logger.warning("Skipped %s=%s: %s", name, value, exc)
            row["skipped"] = str(exc)
            rows.append(row)
            continue
        result = optimize(variant, coeff, subsets, allow_skip=allow_skip, solver=solver, progress=progress)
        best = result.best_policy
        row.update(
            {
                "b1": ph_mean(variant.service),
                "g1": ph_mean(variant.obsolescence),
                "scv": ph_scv(variant.service),
                "modes": _join(best.modes) if best else "",
                "thresholds": _join(best.thresholds) if best else "",
                "j*": format_policy(best) if best else "",
                "C*": result.best_cost,
                "R": result.relative_profit,
                "skipped": "; ".join(result.skipped),
            }
        )
        row.update({f"C{r}": c for r, c in result.fixed_costs.items()})
        rows.append(row)
        if isinstance(progress, SearchProgress):
            progress.update_sweep_task_completed(index + 1)
    columns = [
        name, "b1", "g1", "scv", "modes", "thresholds", "j*", "C*", *fixed_columns, "R", "skipped"
    ]
    return pd.DataFrame(rows, columns=columns)
