import pytest

from crawler_threshold import (
    PolicyError,
    ThresholdPolicy,
    active_mode,
    enumerate_policies,
    format_policy,
    normalize_policy,
    parse_policy,
    subset_thresholds,
)
from crawler_threshold.policy import policy_sort_key


def test_active_mode():
    pol = ThresholdPolicy(K=5, modes=(4, 2, 1), thresholds=(1, 3))
    assert [active_mode(pol, i) for i in range(6)] == [4, 4, 2, 2, 1, 1]
    assert pol.occupancy() == [(4, 0, 1), (2, 2, 3), (1, 4, 5)]
    with pytest.raises(PolicyError):
        active_mode(pol, 6)


def test_single_mode():
    pol = ThresholdPolicy(K=3, modes=(2,))
    assert {active_mode(pol, i) for i in range(4)} == {2}


@pytest.mark.parametrize(
    "modes,thresholds",
    [
        ((), ()),
        ((1, 2), (0,)),
        ((2, 1), ()),
        ((3, 2, 1), (2, 2)),
        ((2, 1), (5,)),
        ((2, 0), (1,)),
    ],
)
def test_invalid_policies(modes, thresholds):
    with pytest.raises(PolicyError):
        ThresholdPolicy(K=5, modes=modes, thresholds=thresholds)


def test_normalize_drops_empty_modes():
    pol = normalize_policy((4, 3, 2, 1), (0, 2, 2), 5)
    assert pol.modes == (4, 3, 1)
    assert pol.thresholds == (0, 2)
    assert subset_thresholds(pol, (4, 3, 2, 1)) == (0, 2, 2)


def test_normalize_extremes():
    assert normalize_policy((2, 1), (-1,), 4).modes == (1,)
    assert normalize_policy((2, 1), (4,), 4).modes == (2,)
    with pytest.raises(PolicyError):
        normalize_policy((3, 2, 1), (3, 1), 4)


def test_enumerate_strict():
    policies = enumerate_policies((1, 2, 3), 5)
    assert len(policies) == 10
    assert all(p.modes == (3, 2, 1) for p in policies)
    assert len(enumerate_policies((4, 1), 5)) == 5


def test_enumerate_allow_skip():
    policies = enumerate_policies((3, 2, 1), 5, allow_skip=True)
    assert len(policies) == 15
    assert len(set(policies)) == 15
    assert all(p.modes[0] == 3 and p.modes[-1] == 1 for p in policies)
    assert sum(p.modes == (3, 1) for p in policies) == 5


def test_enumerate_empty():
    with pytest.raises(PolicyError):
        enumerate_policies((), 3)


def test_sort_key():
    single = ThresholdPolicy(K=3, modes=(2,))
    pair = ThresholdPolicy(K=3, modes=(2, 1), thresholds=(0,))
    assert sorted([pair, single], key=policy_sort_key) == [single, pair]


def test_parse_and_format():
    pol = parse_policy("modes=4,1;thresholds=2", 20)
    assert pol == ThresholdPolicy(K=20, modes=(4, 1), thresholds=(2,))
    assert format_policy(pol) == "modes=4,1;thresholds=2"
    assert parse_policy(format_policy(pol), 20) == pol
    assert parse_policy("modes=3", 5).modes == (3,)


@pytest.mark.parametrize(
    "text", ["modes=4,1", "thresholds=2", "modes=a;thresholds=1", "modes=2,1;foo=1", "modes"]
)
def test_parse_errors(text):
    with pytest.raises(PolicyError):
        parse_policy(text, 5)
