import numpy as np
import pytest

from crawler_threshold import (
    DimensionError,
    PhaseTypeError,
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


def test_exponential():
    ph = ph_exponential(2.0)
    assert ph.order == 1
    assert ph_mean(ph) == pytest.approx(0.5)
    assert ph_scv(ph) == pytest.approx(1.0)
    assert ph.exit.tolist() == [2.0]


def test_erlang():
    ph = ph_erlang(3, 2.0)
    assert ph_mean(ph) == pytest.approx(1.5)
    assert ph_variance(ph) == pytest.approx(0.75)
    assert ph_scv(ph) == pytest.approx(1 / 3)


def test_hyperexponential():
    ph = ph_hyperexponential([0.5, 0.5], [1.0, 2.0])
    assert ph_mean(ph) == pytest.approx(0.75)
    assert ph_moment(ph, 2) == pytest.approx(1.25)
    assert ph_variance(ph) == pytest.approx(0.6875)


def test_constant_mean_hyperexponential():
    low = ph_constant_mean_hyperexponential(2.0, 1.0)
    high = ph_constant_mean_hyperexponential(2.0, 5.0)
    assert ph_mean(low) == pytest.approx(2.0)
    assert ph_mean(high) == pytest.approx(2.0)
    assert ph_scv(high) > ph_scv(low)
    with pytest.raises(ValueError):
        ph_constant_mean_hyperexponential(2.0, 0.4)


def test_packaged_means(four_robots, trace_fit):
    assert ph_mean(four_robots.model.service) == pytest.approx(4.6 / 7)
    assert ph_mean(four_robots.model.obsolescence) == pytest.approx(5.0)
    assert ph_mean(trace_fit.model.service) == pytest.approx(8.1989, rel=1e-4)
    assert ph_mean(trace_fit.model.obsolescence) == pytest.approx(2000.0)


def test_scale():
    ph = ph_erlang(2, 1.0)
    scaled = ph_scale(ph, 4.0)
    assert ph_mean(scaled) == pytest.approx(ph_mean(ph) / 4)
    assert ph_scv(scaled) == pytest.approx(ph_scv(ph))
    with pytest.raises(ValueError):
        ph_scale(ph, 0.0)


def test_init_is_normalized():
    ph = validate_ph([0.5, 0.5 + 1e-12], [[-1.0, 0.0], [0.0, -2.0]])
    assert np.isclose(ph.init.sum(), 1.0)
    assert not ph.init.flags.writeable


def test_violations_are_collected():
    with pytest.raises(PhaseTypeError) as info:
        validate_ph([0.7, 0.7], [[1.0, 0.0], [-0.5, -1.0]])
    violations = info.value.violations
    assert any("sums to" in v for v in violations)
    assert any("not negative" in v for v in violations)
    assert any("off-diagonal" in v for v in violations)


def test_no_exit():
    with pytest.raises(PhaseTypeError, match="positive exit rate"):
        validate_ph([1.0, 0.0], [[-1.0, 1.0], [1.0, -1.0]])


def test_shape_mismatch():
    with pytest.raises(DimensionError):
        validate_ph([1.0], [[-1.0, 0.0], [0.0, -1.0]])
