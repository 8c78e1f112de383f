"""Dense Kronecker algebra and linear solves shared by every model module."""

import warnings
from typing import Optional

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike

from .config import config
from .errors import DegenerateChainError, DimensionError, SingularMatrixError


def as_matrix(a: ArrayLike) -> np.ndarray:
    """Coerce to a finite 2-D float array. 1-D input becomes a row vector."""
    arr = np.atleast_2d(np.asarray(a, dtype=float))
    if arr.ndim != 2:
        msg = f"Expected a matrix, got an array with {arr.ndim} dimensions"
        raise DimensionError(msg)
    if not np.all(np.isfinite(arr)):
        msg = "Matrix entries must be finite"
        raise ValueError(msg)
    return arr


def as_column(c: ArrayLike) -> np.ndarray:
    return np.asarray(c, dtype=float).reshape(-1, 1)


def _check_square(a: np.ndarray, name: str = "matrix"):
    if a.shape[0] != a.shape[1]:
        msg = f"{name} must be square, got shape {a.shape}"
        raise DimensionError(msg)


def kron_product(a: ArrayLike, b: ArrayLike) -> np.ndarray:
    return np.kron(as_matrix(a), as_matrix(b))


def kron_sum(a: ArrayLike, b: ArrayLike) -> np.ndarray:
    """A ⊕ B = A ⊗ I + I ⊗ B."""
    a = as_matrix(a)
    b = as_matrix(b)
    _check_square(a, "A")
    _check_square(b, "B")
    return np.kron(a, np.eye(b.shape[0])) + np.kron(np.eye(a.shape[0]), b)


def kron_vec_power(v: ArrayLike, power: int) -> np.ndarray:
    """Row vector v^{⊗power}; power 0 gives the 1x1 unit."""
    if power < 0:
        msg = f"Kronecker power must be nonnegative, got {power}"
        raise ValueError(msg)
    row = as_matrix(v).reshape(1, -1)
    result = np.ones((1, 1))
    for _ in range(power):
        result = np.kron(result, row)
    return result


def kron_sum_power_sq(m: ArrayLike, power: int) -> np.ndarray:
    """M ⊕ M ⊕ ... ⊕ M with ``power`` terms; power 0 gives the 1x1 zero."""
    if power < 0:
        msg = f"Kronecker power must be nonnegative, got {power}"
        raise ValueError(msg)
    m = as_matrix(m)
    _check_square(m)
    result = np.zeros((1, 1))
    for _ in range(power):
        result = kron_sum(result, m)
    return result


def kron_sum_power_col(c: ArrayLike, power: int) -> np.ndarray:
    """Σ_j I_{R^{j-1}} ⊗ c ⊗ I_{R^{power-j}}, a R^power x R^(power-1) matrix.

    Row state (r_1..r_power) loses exactly one coordinate at rate c[r_j]."""
    if power < 1:
        msg = f"Column Kronecker power must be at least 1, got {power}"
        raise ValueError(msg)
    col = as_column(c)
    size = col.shape[0]
    result = np.zeros((size**power, size ** (power - 1)))
    for j in range(1, power + 1):
        result += np.kron(
            np.kron(np.eye(size ** (j - 1)), col), np.eye(size ** (power - j))
        )
    return result


def _factor(a: np.ndarray):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(a)
    pivots = np.abs(np.diag(lu))
    scale = np.abs(a).max() if a.size else 0.0
    smallest = pivots.min() if pivots.size else 1.0
    if scale == 0.0 or smallest <= np.finfo(float).eps * scale * a.shape[0]:
        condition = float("inf") if smallest == 0.0 else float(pivots.max() / smallest)
        msg = f"Matrix of order {a.shape[0]} is singular (condition estimate {condition:.3g})"
        raise SingularMatrixError(msg, condition=condition)
    return lu, piv


def solve_linear(a: ArrayLike, b: ArrayLike, tolerance: Optional[float] = None):
    """Solve AX = B by LU factorization and verify the residual."""
    a = as_matrix(a)
    _check_square(a, "A")
    b = np.asarray(b, dtype=float)
    if b.shape[0] != a.shape[0]:
        msg = f"Right-hand side has {b.shape[0]} rows, expected {a.shape[0]}"
        raise DimensionError(msg)
    if tolerance is None:
        tolerance = config.solve_tolerance
    factored = _factor(a)
    x = scipy.linalg.lu_solve(factored, b)
    residual = np.abs(a @ x - b).max() if b.size else 0.0
    bound = tolerance * (
        np.abs(a).sum(axis=1).max() * np.abs(x).max() + np.abs(b).max()
    )
    if not np.all(np.isfinite(x)) or residual > bound:
        condition = float(np.linalg.cond(a, 1))
        msg = f"Linear solve residual {residual:.3g} exceeds {bound:.3g} (condition {condition:.3g})"
        raise SingularMatrixError(msg, condition=condition)
    return x


def solve_linear_left(b: ArrayLike, a: ArrayLike, tolerance: Optional[float] = None):
    """Solve XA = B through the transposed system."""
    b = np.asarray(b, dtype=float)
    return solve_linear(as_matrix(a).T, b.T, tolerance=tolerance).T


def solve_left_null(
    q: ArrayLike, normalization: Optional[ArrayLike] = None
) -> np.ndarray:
    """Row vector x with xQ = 0 and x·normalization = 1.

    One column of Q is replaced by the normalization vector, which must
    leave a nonsingular system when Q has a one dimensional left null space."""
    q = as_matrix(q)
    _check_square(q, "Q")
    n = q.shape[0]
    if normalization is None:
        normalization = np.ones(n)
    system = q.copy()
    system[:, -1] = np.asarray(normalization, dtype=float).reshape(-1)
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    try:
        x = solve_linear(system.T, rhs)
    except SingularMatrixError as exc:
        msg = f"Generator of order {n} has more than one stationary vector"
        raise DegenerateChainError(msg) from exc
    floor = -1e-10 * max(np.abs(x).max(), 1.0)
    if x.min() < floor:
        msg = f"Stationary vector has a negative component {x.min():.3g}"
        raise DegenerateChainError(msg)
    return np.clip(x, 0.0, None)
