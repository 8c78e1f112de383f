import numpy as np
import pytest

from crawler_threshold import (
    ArrivalProcessError,
    DimensionError,
    IrreparableModelError,
    arrival_stats,
    batch_map,
    compose_bmmap,
    compose_direct,
    compose_independent,
    compose_scaled,
    compose_thinned,
    validate_bmap,
)

from ._data import four_robots_rates, random_bmap

rng = np.random.default_rng(12345)


def _raw_modes(loaded):
    return [mode["D"] for mode in loaded.document["arrival"]["modes"]]


def test_four_robots_strict_rejects(four_robots):
    with pytest.raises(ArrivalProcessError) as info:
        compose_direct(_raw_modes(four_robots), mode="strict")
    assert not isinstance(info.value, IrreparableModelError)
    violations = info.value.violations
    assert any(v.startswith("mode 2: ") for v in violations)
    assert any(v.startswith("mode 3: ") for v in violations)
    assert not any(v.startswith("mode 1: ") for v in violations)
    assert not any(v.startswith("mode 4: ") for v in violations)


def test_four_robots_repair(four_robots):
    arrival = compose_direct(_raw_modes(four_robots), mode="repair")
    assert len(arrival.repairs) == 4
    mode2 = arrival.mode(2)
    assert mode2.D[1][0, 0] == 0.0
    assert mode2.D[2][0, 0] == 0.0
    assert mode2.D[0][0, 0] == pytest.approx(-5.62)
    assert arrival.mode(3).D[0][1, 1] == pytest.approx(-3.48)
    assert sum(r.startswith("mode 2: ") for r in arrival.repairs) == 3
    assert np.allclose(mode2.total.sum(axis=1), 0.0)


def test_four_robots_repairs_are_logged(four_robots, caplog):
    with caplog.at_level("WARNING", logger="crawler_threshold"):
        compose_direct(_raw_modes(four_robots), mode="repair")
    assert sum("Repaired" in r.getMessage() for r in caplog.records) == 4


def test_irreparable():
    D = [[[-1.0, 0.5], [0.5, -1.0]], [[0.5, -0.5], [0.5, 0.0]]]
    with pytest.raises(IrreparableModelError, match="repair cap"):
        validate_bmap(D, mode="repair")


def test_four_robots_rates(four_robots):
    rates = [arrival_stats(bp).rate for bp in four_robots.model.arrival.modes]
    assert rates == pytest.approx(four_robots_rates, rel=1e-3)
    assert all(a < b for a, b in zip(rates, rates[1:]))


def test_trace_fit_rates(trace_fit):
    arrival = trace_fit.model.arrival
    assert arrival.kind == "scaled"
    assert arrival.kmax == 8
    rates = [arrival_stats(bp).rate for bp in arrival.modes]
    assert rates[0] == pytest.approx(0.0153, rel=2e-2)
    assert rates == pytest.approx([r * rates[0] for r in range(1, 5)])
    assert len(trace_fit.repairs) == 2


def test_poisson_stats():
    stats = arrival_stats(validate_bmap([[[-2.0]], [[2.0]]]))
    assert stats.rate == pytest.approx(2.0)
    assert stats.group_rate == pytest.approx(2.0)
    assert stats.group_variance == pytest.approx(0.25)
    assert stats.correlation == pytest.approx(0.0, abs=1e-12)
    assert stats.theta.tolist() == [1.0]


def test_batch_process_accessors():
    bp = validate_bmap([[[-3.0]], [[1.0]], [[0.5]], [[1.5]]])
    assert bp.W == 1
    assert bp.kmax == 3
    assert bp.total.tolist() == [[0.0]]
    assert bp.derivative.tolist() == [[1.0 + 1.0 + 4.5]]
    assert bp.tail(2).tolist() == [[2.0]]
    assert bp.tail(4).tolist() == [[0.0]]
    assert bp.batch(5).tolist() == [[0.0]]


def test_batch_map():
    D0 = [[-1.0, 0.5], [0.25, -0.75]]
    D1 = [[0.3, 0.2], [0.1, 0.4]]
    pmf = [0.5, 0.25, 0.25]
    bp = batch_map(D0, D1, pmf)
    assert bp.kmax == 3
    assert np.allclose(bp.D[2], 0.25 * np.asarray(D1))
    epochs = arrival_stats(validate_bmap([D0, D1]))
    assert arrival_stats(bp).rate == pytest.approx(epochs.rate * 1.75)


def test_independent():
    robots = [random_bmap(rng, W=2, kmax=2) for _ in range(3)]
    arrival = compose_independent(robots)
    assert arrival.kind == "independent"
    assert arrival.W == 8
    single = [arrival_stats(bp).rate for bp in robots]
    rates = [arrival_stats(bp).rate for bp in arrival.modes]
    assert rates == pytest.approx(np.cumsum(single))


def test_thinned():
    bp = random_bmap(rng, W=2, kmax=3)
    q = [0.25, 0.5, 1.0]
    arrival = compose_thinned(bp, q)
    rate = arrival_stats(bp).rate
    assert [arrival_stats(m).rate for m in arrival.modes] == pytest.approx(
        [ql * rate for ql in q]
    )
    assert np.allclose(arrival.mode(1).total, bp.total)
    with pytest.raises(ValueError):
        compose_thinned(bp, [0.5, 0.25, 1.0])
    with pytest.raises(ValueError):
        compose_thinned(bp, [0.5, 0.9])


def test_scaled():
    bp = random_bmap(rng, W=2, kmax=2)
    arrival = compose_scaled(bp, [1, 2, 3])
    rate = arrival_stats(bp).rate
    assert [arrival_stats(m).rate for m in arrival.modes] == pytest.approx(
        [rate, 2 * rate, 3 * rate]
    )
    with pytest.raises(ValueError):
        compose_scaled(bp, [2, 1])


def test_bmmap():
    arrival = compose_bmmap([[-3.0]], [[[[1.0]]], [[[2.0]]]])
    assert arrival.kind == "bmmap"
    assert arrival.mode(1).D[0].tolist() == [[-1.0]]
    assert [arrival_stats(m).rate for m in arrival.modes] == pytest.approx([1.0, 3.0])


def test_direct_dimension_mismatch():
    with pytest.raises(DimensionError):
        compose_direct([[[[-1.0]], [[1.0]]], random_bmap(rng, W=2)])


def test_mode_index():
    arrival = compose_direct([[[[-1.0]], [[1.0]]]])
    with pytest.raises(ValueError):
        arrival.mode(2)
