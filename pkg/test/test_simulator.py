import numpy as np
import pytest

from crawler_threshold import (
    SimConfig,
    ThresholdPolicy,
    active_mode,
    evaluate_policy,
    ph_erlang,
    ph_hyperexponential,
    ph_mean,
    ph_variance,
    sample_ph,
    simulate,
)

from ._data import random_model


def test_mm12(mm12):
    pol = ThresholdPolicy(K=2, modes=(1,))
    report = simulate(mm12, pol, SimConfig(n_arrivals=20000, seed=1))
    assert report.p_star.value == pytest.approx(0.4, abs=0.02)
    assert report.p_loss.value == pytest.approx(0.2, abs=0.02)
    assert report.p_obs.value == pytest.approx(0.2, abs=0.02)
    assert report.p_success.value == pytest.approx(0.6, abs=0.02)
    assert report.mean_queue_length.value == pytest.approx(0.8, abs=0.03)
    assert report.arrival_rate.value == pytest.approx(1.0, abs=0.03)
    assert report.n_act.value == pytest.approx(1.0)
    assert report.v1_bar.value == pytest.approx(7 / 6, rel=0.05)
    assert report.v2_bar.value == pytest.approx(0.5, rel=0.05)
    assert report.p_loss.half_width > 0.0


def test_counters_are_conserved(four_robots):
    pol = ThresholdPolicy(K=5, modes=(4, 1), thresholds=(2,))
    report = simulate(four_robots.model, pol, SimConfig(n_arrivals=10000, seed=3))
    assert report.arrived == report.admitted + report.lost
    assert report.admitted == report.served + report.obsolesced + report.in_system_at_end
    assert 0 <= report.in_system_at_end <= 5
    values = report.as_dict()
    assert "p_loss_half_width" in values
    assert values["arrived"] == report.arrived


def test_seed_determinism(four_robots):
    pol = ThresholdPolicy(K=5, modes=(3,))
    cfg = SimConfig(n_arrivals=10000, seed=7)
    first = simulate(four_robots.model, pol, cfg)
    second = simulate(four_robots.model, pol, cfg)
    assert first.arrived == second.arrived
    assert first.lost == second.lost
    assert first.p_loss == second.p_loss
    assert first.p_star == second.p_star
    other = simulate(four_robots.model, pol, SimConfig(n_arrivals=10000, seed=8))
    assert other.arrived != first.arrived or other.p_loss != first.p_loss


def test_mode_trace(four_robots):
    pol = ThresholdPolicy(K=5, modes=(4, 2, 1), thresholds=(0, 2))
    report = simulate(
        four_robots.model, pol, SimConfig(n_arrivals=10000, seed=2, record_trace=True)
    )
    assert report.mode_trace
    times = [t for t, _, _ in report.mode_trace]
    assert all(a <= b for a, b in zip(times, times[1:]))
    for _, level, mode in report.mode_trace:
        assert 0 <= level <= 5
        assert mode == active_mode(pol, level)


def test_policy_mismatch(mm12):
    with pytest.raises(ValueError):
        simulate(mm12, ThresholdPolicy(K=3, modes=(1,)), SimConfig(n_arrivals=10000))


@pytest.mark.parametrize(
    "kwargs",
    [
        {"n_arrivals": 100},
        {"warmup": 1.0},
        {"n_batches": 1},
        {"confidence": 1.0},
    ],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        SimConfig(**kwargs)


@pytest.mark.parametrize(
    "ph",
    [ph_erlang(3, 2.0), ph_hyperexponential([0.9, 0.1], [2.0, 0.2])],
)
def test_sample_ph(ph):
    samples = sample_ph(ph, np.random.default_rng(0), size=20000)
    assert samples.shape == (20000,)
    assert samples.min() > 0.0
    sigma = np.sqrt(ph_variance(ph) / samples.size)
    assert abs(samples.mean() - ph_mean(ph)) < 4 * sigma
    assert isinstance(sample_ph(ph, np.random.default_rng(0)), float)


checked_measures = ("p_star", "p_loss", "p_obs", "n_act", "v1_bar")


def _assert_covers(estimate, exact, name):
    # A measure that never varies has a zero-width interval
    if estimate.half_width == 0.0:
        assert estimate.value == pytest.approx(exact, rel=1e-12), name
    else:
        assert estimate.covers(exact), name


@pytest.mark.slow
def test_matches_analysis_mm12(mm12):
    pol = ThresholdPolicy(K=2, modes=(1,))
    exact = evaluate_policy(mm12, pol)
    report = simulate(mm12, pol, SimConfig(n_arrivals=10**6, seed=13))
    for name in checked_measures:
        _assert_covers(getattr(report, name), getattr(exact, name), name)


@pytest.mark.slow
@pytest.mark.parametrize("seed", [101, 202, 303, 404, 505])
def test_matches_analysis_random_models(seed):
    model = random_model(np.random.default_rng(seed), N=2, W=2, M=2, R=2, K=4, kmax=2)
    pol = ThresholdPolicy(K=4, modes=(2, 1), thresholds=(1,))
    exact = evaluate_policy(model, pol)
    report = simulate(model, pol, SimConfig(n_arrivals=10**6, seed=seed))
    for name in checked_measures:
        _assert_covers(getattr(report, name), getattr(exact, name), name)


@pytest.mark.slow
def test_matches_analysis_four_robots(four_robots):
    pol = ThresholdPolicy(K=5, modes=(4, 1), thresholds=(2,))
    exact = evaluate_policy(four_robots.model, pol)
    report = simulate(four_robots.model, pol, SimConfig(n_arrivals=10**6, seed=5))
    for name in (*checked_measures, "mean_queue_length", "v2_bar"):
        _assert_covers(getattr(report, name), getattr(exact, name), name)
