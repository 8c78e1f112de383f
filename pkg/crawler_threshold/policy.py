"""Threshold policies: queue length -> number of active robots."""

from bisect import bisect_left
from dataclasses import dataclass
from itertools import combinations, combinations_with_replacement
from typing import Dict, Iterable, List, Sequence, Tuple

from .errors import PolicyError


@dataclass(frozen=True)
class ThresholdPolicy:
    """Mode ``modes[r]`` is active at levels thresholds[r-1]+1 .. thresholds[r],
    with thresholds[-1] = -1 and thresholds[s-1] = K implied."""

    K: int
    modes: Tuple[int, ...]
    thresholds: Tuple[int, ...] = ()

    def __post_init__(self):
        if len(self.modes) < 1:
            msg = "A policy needs at least one mode"
            raise PolicyError(msg)
        if len(self.thresholds) != len(self.modes) - 1:
            msg = f"{len(self.modes)} modes need {len(self.modes) - 1} thresholds, got {len(self.thresholds)}"
            raise PolicyError(msg)
        if any(m < 1 for m in self.modes):
            msg = f"Mode indices start at 1, got {self.modes}"
            raise PolicyError(msg)
        if any(a <= b for a, b in zip(self.modes, self.modes[1:])):
            msg = f"Modes must be strictly decreasing, got {self.modes}"
            raise PolicyError(msg)
        if any(a >= b for a, b in zip(self.thresholds, self.thresholds[1:])):
            msg = f"Thresholds must be strictly increasing, got {self.thresholds}"
            raise PolicyError(msg)
        if self.thresholds and (self.thresholds[0] < 0 or self.thresholds[-1] > self.K - 1):
            msg = f"Thresholds must lie in 0..{self.K - 1}, got {self.thresholds}"
            raise PolicyError(msg)

    def occupancy(self) -> List[Tuple[int, int, int]]:
        """(mode, first level, last level) for every mode."""
        bounds = (-1, *self.thresholds, self.K)
        return [(m, bounds[r] + 1, bounds[r + 1]) for r, m in enumerate(self.modes)]


def active_mode(pol: ThresholdPolicy, i: int) -> int:
    if not 0 <= i <= pol.K:
        msg = f"Queue length {i} is outside 0..{pol.K}"
        raise PolicyError(msg)
    return pol.modes[bisect_left(pol.thresholds, i)]


def normalize_policy(
    modes: Sequence[int], thresholds: Sequence[int], K: int
) -> ThresholdPolicy:
    """Canonical policy from non-strict thresholds -1 <= t_1 <= ... <= K.

    Modes left with an empty range of levels are dropped."""
    modes = tuple(int(m) for m in modes)
    thresholds = tuple(int(t) for t in thresholds)
    if len(thresholds) != len(modes) - 1:
        msg = f"{len(modes)} modes need {len(modes) - 1} thresholds, got {len(thresholds)}"
        raise PolicyError(msg)
    bounds = (-1, *thresholds, K)
    if any(a > b for a, b in zip(bounds, bounds[1:])):
        msg = f"Thresholds must be non-decreasing within -1..{K}, got {thresholds}"
        raise PolicyError(msg)
    kept = [(m, bounds[r + 1]) for r, m in enumerate(modes) if bounds[r + 1] > bounds[r]]
    return ThresholdPolicy(
        K=K,
        modes=tuple(m for m, _ in kept),
        thresholds=tuple(last for _, last in kept[:-1]),
    )


def policy_sort_key(pol: ThresholdPolicy):
    """Fewer modes first, then lexicographic on (modes, thresholds)."""
    return (len(pol.modes), pol.modes, pol.thresholds)


def enumerate_policies(
    mode_subset: Iterable[int], K: int, allow_skip: bool = False
) -> List[ThresholdPolicy]:
    """Every threshold policy over the given modes.

    By default thresholds are strictly increasing in 0..K-1 and every mode
    is used. With ``allow_skip`` thresholds are non-decreasing, so the
    first and last modes are always used and the others may be skipped;
    results are then distinct canonical policies."""
    modes = tuple(sorted(set(mode_subset), reverse=True))
    if not modes:
        msg = "The mode subset must not be empty"
        raise PolicyError(msg)
    if not allow_skip:
        return [
            ThresholdPolicy(K=K, modes=modes, thresholds=thresholds)
            for thresholds in combinations(range(K), len(modes) - 1)
        ]
    policies: Dict[ThresholdPolicy, None] = {}
    for thresholds in combinations_with_replacement(range(K), len(modes) - 1):
        policies.setdefault(normalize_policy(modes, thresholds, K), None)
    return list(policies)


def subset_thresholds(pol: ThresholdPolicy, mode_subset: Iterable[int]) -> Tuple[int, ...]:
    """Non-strict thresholds of ``pol`` written against a larger mode subset,
    t_r being the last level whose mode is at least the r-th subset mode."""
    subset = tuple(sorted(set(mode_subset), reverse=True))
    levels = [active_mode(pol, i) for i in range(pol.K + 1)]
    result = []
    for mode in subset[:-1]:
        covered = [i for i, m in enumerate(levels) if m >= mode]
        result.append(covered[-1] if covered else -1)
    return tuple(result)


def parse_policy(text: str, K: int) -> ThresholdPolicy:
    """Parse ``modes=4,1;thresholds=2``; non-strict thresholds are normalized."""
    fields = {}
    for part in text.split(";"):
        if not part.strip():
            continue
        key, sep, value = part.partition("=")
        if not sep:
            msg = f"Expected key=value in policy {text!r}, got {part!r}"
            raise PolicyError(msg)
        fields[key.strip()] = [v for v in value.split(",") if v.strip()]
    unknown = set(fields) - {"modes", "thresholds"}
    if unknown or "modes" not in fields:
        msg = f"Policy {text!r} must give modes= and optionally thresholds="
        raise PolicyError(msg)
    try:
        modes = [int(v) for v in fields["modes"]]
        thresholds = [int(v) for v in fields.get("thresholds", [])]
    except ValueError as exc:
        msg = f"Policy {text!r} contains a non-integer entry"
        raise PolicyError(msg) from exc
    return normalize_policy(modes, thresholds, K)


def format_policy(pol: ThresholdPolicy) -> str:
    modes = ",".join(str(m) for m in pol.modes)
    thresholds = ",".join(str(t) for t in pol.thresholds)
    return f"modes={modes};thresholds={thresholds}"
