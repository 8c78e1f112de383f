"""Phase-type distributions of service and obsolescence times."""

from dataclasses import dataclass
from math import factorial
from typing import List, Optional, Sequence

import numpy as np
from numpy.typing import ArrayLike

from .config import config
from .errors import DimensionError, PhaseTypeError, SingularMatrixError
from .matrix_core import as_matrix, solve_linear


@dataclass(frozen=True, eq=False)
class PhaseType:
    """Absorption time of a transient chain with initial row vector ``init``
    and sub-generator ``subgen``. Build through validate_ph."""

    init: np.ndarray
    subgen: np.ndarray

    @property
    def order(self) -> int:
        return self.init.shape[0]

    @property
    def exit(self) -> np.ndarray:
        """Absorption rates -subgen·e as a 1-D array."""
        return -self.subgen.sum(axis=1)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def validate_ph(
    init: ArrayLike, subgen: ArrayLike, tolerance: Optional[float] = None
) -> PhaseType:
    if tolerance is None:
        tolerance = config.validation_tolerance
    init = np.asarray(init, dtype=float).reshape(-1)
    subgen = as_matrix(subgen)
    if subgen.shape != (init.shape[0], init.shape[0]):
        msg = f"Sub-generator shape {subgen.shape} does not match initial vector of length {init.shape[0]}"
        raise DimensionError(msg)

    violations: List[str] = []
    if np.any(init < -tolerance):
        violations.append(f"init has a negative entry {init.min():.6g}")
    if abs(init.sum() - 1.0) > tolerance:
        violations.append(f"init sums to {init.sum():.6g}, expected 1")
    diagonal = np.diag(subgen)
    for index in np.flatnonzero(diagonal >= 0.0):
        violations.append(
            f"subgen diagonal entry ({index},{index}) = {diagonal[index]:.6g} is not negative"
        )
    off_diagonal = subgen - np.diag(diagonal)
    for row, col in zip(*np.nonzero(off_diagonal < -tolerance)):
        violations.append(
            f"subgen off-diagonal entry ({row},{col}) = {subgen[row, col]:.6g} is negative"
        )
    exit_rates = -subgen.sum(axis=1)
    for index in np.flatnonzero(exit_rates < -tolerance):
        violations.append(
            f"exit rate of phase {index} is negative ({exit_rates[index]:.6g})"
        )
    if not np.any(exit_rates > tolerance):
        violations.append("no phase has a positive exit rate")
    if not violations:
        try:
            solve_linear(-subgen, np.ones(init.shape[0]))
        except SingularMatrixError:
            violations.append("subgen is singular")

    if violations:
        msg = "Invalid phase-type representation: " + "; ".join(violations)
        raise PhaseTypeError(msg, violations)
    init = np.clip(init, 0.0, None)
    return PhaseType(_frozen(init / init.sum()), _frozen(subgen))


def ph_moment(ph: PhaseType, n: int) -> float:
    """n-th raw moment n!·β(-S)^{-n}·e."""
    vector = np.ones(ph.order)
    for _ in range(n):
        vector = solve_linear(-ph.subgen, vector)
    return float(factorial(n) * ph.init @ vector)


def ph_mean(ph: PhaseType) -> float:
    return ph_moment(ph, 1)


def ph_variance(ph: PhaseType) -> float:
    return ph_moment(ph, 2) - ph_moment(ph, 1) ** 2


def ph_scv(ph: PhaseType) -> float:
    """Squared coefficient of variation."""
    return ph_variance(ph) / ph_mean(ph) ** 2


def ph_scale(ph: PhaseType, s: float) -> PhaseType:
    """Multiply the sub-generator by s, dividing the mean by s."""
    if s <= 0:
        msg = f"Scale factor must be positive, got {s}"
        raise ValueError(msg)
    return PhaseType(ph.init, _frozen(s * ph.subgen))


def ph_exponential(rate: float) -> PhaseType:
    return validate_ph([1.0], [[-rate]])


def ph_erlang(k: int, rate: float) -> PhaseType:
    """k stages, each with the given rate."""
    subgen = np.diag(np.full(k, -rate)) + np.diag(np.full(k - 1, rate), 1)
    init = np.zeros(k)
    init[0] = 1.0
    return validate_ph(init, subgen)


def ph_hyperexponential(probs: Sequence[float], rates: Sequence[float]) -> PhaseType:
    return validate_ph(probs, np.diag(-np.asarray(rates, dtype=float)))


def ph_constant_mean_hyperexponential(
    mean: float, alpha1: float, p1: float = 0.9
) -> PhaseType:
    """Two-phase hyper-exponential with init (p1, 1-p1) and the given mean.

    The first rate is ``alpha1``; the second follows from the mean, so
    varying ``alpha1`` changes only the variance."""
    if alpha1 * mean <= p1:
        msg = f"alpha1 must exceed p1/mean = {p1 / mean:.6g}, got {alpha1}"
        raise ValueError(msg)
    alpha2 = (1.0 - p1) * alpha1 / (mean * alpha1 - p1)
    return ph_hyperexponential([p1, 1.0 - p1], [alpha1, alpha2])


def ph_to_dict(ph: PhaseType) -> dict:
    return {"init": ph.init.tolist(), "subgen": ph.subgen.tolist()}
