import math
from dataclasses import replace

import numpy as np
import pytest

from crawler_threshold import (
    CostCoefficients,
    IncompleteReportError,
    ThresholdPolicy,
    build_generator,
    config,
    cost,
    evaluate_policy,
    fixed_mode_costs,
    optimize,
    performance_report,
    relative_profit,
    solve,
    subset_thresholds,
    sweep,
    threshold_curves,
)
from crawler_threshold.optimizer import evaluate_costs, resolve_subsets

from ._data import (
    four_robots_best_cost,
    four_robots_best_modes,
    four_robots_best_thresholds,
    four_robots_fixed_costs,
    four_robots_row_thresholds,
    four_robots_rows,
    trace_fit_best_cost,
    trace_fit_best_modes,
    trace_fit_best_thresholds,
    trace_fit_fixed_costs,
    trace_fit_relative_profit,
    trace_fit_rows,
)

unit_costs = CostCoefficients(c_loss=1.0, c_obs=1.0, a=1.0, c_rob=1.0, c_star=1.0)


def test_cost_mm12(mm12):
    report = evaluate_policy(mm12, ThresholdPolicy(K=2, modes=(1,)))
    assert cost(report, unit_costs) == pytest.approx(0.4 + 7 / 6 + 1.0 + 0.4)


def test_cost_requires_sojourns(mm12):
    pol = ThresholdPolicy(K=2, modes=(1,))
    report = performance_report(solve(build_generator(mm12, pol)), mm12, pol)
    with pytest.raises(IncompleteReportError):
        cost(report, unit_costs)


def test_cost_without_sojourn_weight(mm12):
    report = evaluate_policy(mm12, ThresholdPolicy(K=2, modes=(1,)))
    report = replace(report, v1_bar=float("nan"))
    value = cost(report, replace(unit_costs, a=0.0))
    assert value == pytest.approx(0.4 + 1.0 + 0.4)


def test_negative_coefficients():
    with pytest.raises(ValueError, match="nonnegative"):
        CostCoefficients(c_loss=1.0, c_obs=-1.0, a=0.0, c_rob=1.0, c_star=1.0)


def test_relative_profit():
    assert relative_profit(63.54, four_robots_fixed_costs) == pytest.approx(28.93, abs=0.01)
    assert relative_profit(trace_fit_best_cost, trace_fit_fixed_costs) == pytest.approx(
        trace_fit_relative_profit, abs=0.01
    )


def test_resolve_subsets():
    assert resolve_subsets("all", 3) == [
        (1,), (2,), (3,), (2, 1), (3, 1), (3, 2), (3, 2, 1)
    ]
    assert resolve_subsets([[1, 4], [4, 1]], 4) == [(4, 1)]
    with pytest.raises(ValueError):
        resolve_subsets([[5, 1]], 4)
    with pytest.raises(ValueError):
        resolve_subsets("some", 4)


def test_trace_fit_fixed_costs(trace_fit):
    costs = fixed_mode_costs(trace_fit.model, trace_fit.costs)
    assert [costs[r] for r in range(1, 5)] == pytest.approx(trace_fit_fixed_costs, rel=5e-3)


def test_trace_fit_best_pair(trace_fit):
    result = optimize(trace_fit.model, trace_fit.costs, subsets=[[4, 1]])
    assert result.best_policy.modes == (4, 1)
    assert result.best_cost == pytest.approx(trace_fit_best_cost, rel=5e-3)
    assert result.relative_profit == pytest.approx(trace_fit_relative_profit, abs=0.5)
    assert result.table[0].n_policies == 20
    assert not result.skipped
    frame = result.to_dataframe()
    assert list(frame.columns) == ["subset", "modes", "thresholds", "subset_thresholds", "J"]
    assert frame.loc[0, "subset"] == "4,1"


def test_trace_fit_all_subsets(trace_fit):
    result = optimize(trace_fit.model, trace_fit.costs)
    assert result.best_policy.modes == trace_fit_best_modes
    assert result.best_policy.thresholds == trace_fit_best_thresholds
    assert result.best_cost == pytest.approx(trace_fit_best_cost, rel=5e-3)
    found = {row.subset: row.cost for row in result.table}
    assert set(found) == set(trace_fit_rows)
    for subset, reference in trace_fit_rows.items():
        assert found[subset] == pytest.approx(reference, rel=5e-3), subset


def test_scheduler_determinism(four_robots, monkeypatch):
    results = []
    for scheduler in ("synchronous", "threads"):
        monkeypatch.setattr(config, "scheduler", scheduler)
        result = optimize(four_robots.model, four_robots.costs, subsets=[[4, 2, 1], [3, 1]])
        results.append(result)
    first, second = results
    assert first.best_policy == second.best_policy
    assert first.best_cost == pytest.approx(second.best_cost, rel=1e-12)
    assert list(first.evaluations) == list(second.evaluations)
    assert list(first.evaluations.values()) == pytest.approx(
        list(second.evaluations.values()), rel=1e-12
    )


def test_full_search(four_robots):
    result = optimize(four_robots.model, four_robots.costs)
    assert len(result.table) == 15
    finite = [c for c in result.fixed_costs.values() if np.isfinite(c)]
    assert result.best_cost <= min(finite)
    assert result.relative_profit >= 0.0
    assert result.best_cost == min(result.evaluations.values())
    strict = optimize(four_robots.model, four_robots.costs, allow_skip=False)
    assert strict.best_cost >= result.best_cost - 1e-12


def test_state_space_skip(four_robots):
    result = optimize(four_robots.model, four_robots.costs, subsets=[[4, 1]], K=14)
    assert result.best_policy is None
    assert math.isnan(result.best_cost)
    assert len(result.skipped) == 1
    assert "states" in result.skipped[0]


def test_failed_policies_are_skipped(mm12, caplog):
    policies = [ThresholdPolicy(K=2, modes=(1,)), ThresholdPolicy(K=2, modes=(2,))]
    with caplog.at_level("WARNING", logger="crawler_threshold"):
        costs, skipped = evaluate_costs(mm12, policies, unit_costs)
    assert list(costs) == [policies[0]]
    assert len(skipped) == 1
    assert any("Skipped policy" in r.getMessage() for r in caplog.records)


def test_threshold_curves(trace_fit):
    frame = threshold_curves(trace_fit.model, trace_fit.costs, [[4, 1], [3, 1]])
    assert list(frame.columns) == ["modes", "threshold", "J"]
    assert len(frame) == 40
    best = frame[frame["modes"] == "4,1"]["J"].min()
    result = optimize(trace_fit.model, trace_fit.costs, subsets=[[4, 1]])
    assert best == pytest.approx(result.best_cost)


def test_sweep_capacity(four_robots):
    frame = sweep(four_robots.model, four_robots.costs, "K", [1, 2, 3], subsets=[[4, 1]])
    assert list(frame["K"]) == [1, 2, 3]
    assert frame.loc[0, "skipped"]
    assert math.isnan(frame.loc[0, "C*"])
    assert frame.loc[1, "modes"] == "4,1"
    assert {"b1", "g1", "scv", "j*", "C1", "C4", "R"} <= set(frame.columns)
    assert frame.loc[2, "j*"] == f"modes=4,1;thresholds={frame.loc[2, 'thresholds']}"


def test_sweep_service_scale(four_robots):
    frame = sweep(
        four_robots.model, four_robots.costs, "scale-service", [0.5, 2.0], subsets=[[4, 1]]
    )
    assert frame["b1"].tolist() == pytest.approx([2 * 4.6 / 7, 0.5 * 4.6 / 7])
    assert frame["scv"].tolist() == pytest.approx([frame.loc[0, "scv"]] * 2)


def test_four_robots_all_subsets(four_robots):
    result = optimize(four_robots.model, four_robots.costs)
    assert result.best_policy.modes == four_robots_best_modes
    assert result.best_policy.thresholds == four_robots_best_thresholds
    assert result.best_cost == pytest.approx(four_robots_best_cost, rel=5e-3)
    assert result.relative_profit == pytest.approx(28.93, abs=0.5)
    rows = {row.subset: row for row in result.table}
    assert set(rows) == set(four_robots_rows)
    for subset, reference in four_robots_rows.items():
        assert rows[subset].cost == pytest.approx(reference, rel=5e-3), subset
    for subset, thresholds in four_robots_row_thresholds.items():
        assert subset_thresholds(rows[subset].policy, subset) == thresholds
    assert [result.fixed_costs[r] for r in range(1, 5)] == pytest.approx(
        four_robots_fixed_costs, rel=5e-3
    )
