import numpy as np
import pytest

from crawler_threshold import (
    ThresholdPolicy,
    WrongSolverError,
    assemble_dense,
    build_generator,
    solve,
)
from crawler_threshold.stationary_solver import residual

from ._data import mm12_model, random_model

rng = np.random.default_rng(12345)


@pytest.mark.parametrize("method", ["auto", "general", "qbd", "dense"])
def test_mm12(mm12, method):
    bg = build_generator(mm12, ThresholdPolicy(K=2, modes=(1,)))
    sol = solve(bg, method)
    assert sol.level_probabilities() == pytest.approx([0.4, 0.4, 0.2])
    assert sol.residual < 1e-12
    assert sol.K == 2


def test_auto_picks_qbd(mm12):
    sol = solve(build_generator(mm12, ThresholdPolicy(K=2, modes=(1,))))
    assert sol.method == "qbd"


def test_mm1k_geometric():
    model = mm12_model(rate=0.5, mu=1.0, theta=1e-6, K=6)
    sol = solve(build_generator(model, ThresholdPolicy(K=6, modes=(1,))))
    levels = sol.level_probabilities()
    assert levels[1:] / levels[:-1] == pytest.approx(np.full(6, 0.5), rel=1e-4)


def test_general_matches_dense(four_robots):
    model = four_robots.model
    for pol in (
        ThresholdPolicy(K=5, modes=(4,)),
        ThresholdPolicy(K=5, modes=(4, 1), thresholds=(2,)),
        ThresholdPolicy(K=5, modes=(4, 3, 2, 1), thresholds=(0, 1, 3)),
    ):
        bg = build_generator(model, pol)
        general = solve(bg, "general")
        assert general.method == "general"
        dense = solve(bg, "dense")
        for p_general, p_dense in zip(general.p, dense.p):
            assert np.allclose(p_general, p_dense, atol=1e-10)
        flat = np.concatenate(general.p)
        assert np.abs(flat @ assemble_dense(bg)).max() < 1e-9
        assert flat.min() >= 0.0
        assert flat.sum() == pytest.approx(1.0)


def test_random_models():
    for _ in range(5):
        model = random_model(rng, N=2, W=2, M=2, R=2, K=4, kmax=2)
        bg = build_generator(model, ThresholdPolicy(K=4, modes=(2, 1), thresholds=(1,)))
        general = solve(bg)
        dense = solve(bg, "dense")
        assert np.allclose(np.concatenate(general.p), np.concatenate(dense.p), atol=1e-10)
        assert residual(bg, general.p) < 1e-9


def test_qbd_matches_general():
    model = random_model(rng, N=2, W=2, M=2, R=2, K=5, kmax=1)
    bg = build_generator(model, ThresholdPolicy(K=5, modes=(2, 1), thresholds=(2,)))
    assert bg.is_tridiagonal
    qbd = solve(bg, "qbd")
    general = solve(bg, "general")
    assert np.allclose(np.concatenate(qbd.p), np.concatenate(general.p), atol=1e-10)


def test_qbd_rejects_batches(four_robots):
    bg = build_generator(four_robots.model, ThresholdPolicy(K=5, modes=(4,)))
    with pytest.raises(WrongSolverError):
        solve(bg, "qbd")


def test_unknown_method(mm12):
    bg = build_generator(mm12, ThresholdPolicy(K=2, modes=(1,)))
    with pytest.raises(ValueError, match="Unknown solver"):
        solve(bg, "power")
