"""Batch Markovian arrival processes, one per robot activation mode."""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike
from scipy.sparse.csgraph import connected_components

from .config import config
from .errors import ArrivalProcessError, DimensionError, IrreparableModelError
from .matrix_core import as_matrix, kron_sum, solve_left_null, solve_linear

logger = logging.getLogger(__name__)

validation_modes = [
    ("STRICT", "strict"),
    ("REPAIR", "repair"),
]
validation_modes_values = [m[1] for m in validation_modes]
ValidationMode = Enum("ValidationMode", validation_modes)

arrival_kinds = [
    ("DIRECT", "direct"),
    ("INDEPENDENT", "independent"),
    ("THINNED", "thinned"),
    ("BMMAP", "bmmap"),
    ("SCALED", "scaled"),
]
arrival_kinds_values = [k[1] for k in arrival_kinds]
ArrivalKind = Enum("ArrivalKind", arrival_kinds)

# The lag-1 correlation is normalized by the inter-group variance v^(l)
CORRELATION_DENOMINATOR = "group_variance"


@dataclass(frozen=True, eq=False)
class BatchProcess:
    """BMAP matrices D[0..kmax] over a modulating space of size W."""

    D: Tuple[np.ndarray, ...]
    repairs: Tuple[str, ...] = ()

    @property
    def W(self) -> int:
        return self.D[0].shape[0]

    @property
    def kmax(self) -> int:
        return len(self.D) - 1

    def batch(self, k: int) -> np.ndarray:
        """D_k, zero beyond kmax."""
        if k <= self.kmax:
            return self.D[k]
        return np.zeros((self.W, self.W))

    @property
    def total(self) -> np.ndarray:
        """D(1) = Σ_k D_k."""
        return np.sum(self.D, axis=0)

    @property
    def derivative(self) -> np.ndarray:
        """D'(1) = Σ_k k·D_k."""
        return np.sum([k * d for k, d in enumerate(self.D)], axis=0)

    def tail(self, k: int) -> np.ndarray:
        """Σ_{r≥k} D_r."""
        if k > self.kmax:
            return np.zeros((self.W, self.W))
        return np.sum(self.D[k:], axis=0)


@dataclass(frozen=True, eq=False)
class ModedArrival:
    """One BatchProcess per mode; mode l (1-based) means l active robots."""

    modes: Tuple[BatchProcess, ...]
    kind: str = "direct"
    repairs: Tuple[str, ...] = ()

    @property
    def N(self) -> int:
        return len(self.modes)

    @property
    def W(self) -> int:
        return self.modes[0].W

    @property
    def kmax(self) -> int:
        return max(bp.kmax for bp in self.modes)

    def mode(self, index: int) -> BatchProcess:
        if not 1 <= index <= self.N:
            msg = f"Mode {index} is outside 1..{self.N}"
            raise ValueError(msg)
        return self.modes[index - 1]


@dataclass(frozen=True)
class ArrivalStats:
    theta: np.ndarray = field(repr=False)
    rate: float
    group_rate: float
    group_variance: float
    correlation: float


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _irreducible(generator: np.ndarray) -> bool:
    adjacency = (np.abs(generator) > 0) & ~np.eye(generator.shape[0], dtype=bool)
    n_components, _ = connected_components(adjacency, directed=True, connection="strong")
    return n_components == 1


def _strict_violations(D: List[np.ndarray], tolerance: float) -> List[str]:
    violations: List[str] = []
    d0 = D[0]
    for index in np.flatnonzero(np.diag(d0) >= 0.0):
        violations.append(
            f"D_0 diagonal entry ({index},{index}) = {d0[index, index]:.6g} is not negative"
        )
    off_diagonal = d0 - np.diag(np.diag(d0))
    for row, col in zip(*np.nonzero(off_diagonal < -tolerance)):
        violations.append(
            f"D_0 off-diagonal entry ({row},{col}) = {d0[row, col]:.6g} is negative"
        )
    for k, dk in enumerate(D[1:], start=1):
        for row, col in zip(*np.nonzero(dk < -tolerance)):
            violations.append(f"D_{k} entry ({row},{col}) = {dk[row, col]:.6g} is negative")
    row_sums = np.sum(D, axis=0).sum(axis=1)
    for row in np.flatnonzero(np.abs(row_sums) > tolerance):
        violations.append(f"row {row} of D(1) sums to {row_sums[row]:.6g}, expected 0")
    if not violations and not _irreducible(np.sum(D, axis=0)):
        violations.append("D(1) is not irreducible")
    return violations


def _repair(D: List[np.ndarray], cap: float, tolerance: float):
    repairs: List[str] = []
    irreparable: List[str] = []
    d0 = D[0]
    for k, dk in enumerate(D):
        mask = dk < -tolerance
        if k == 0:
            mask &= ~np.eye(dk.shape[0], dtype=bool)
        for row, col in zip(*np.nonzero(mask)):
            value = dk[row, col]
            if -value <= cap:
                dk[row, col] = 0.0
                repairs.append(f"D_{k}[{row},{col}] = {value:.6g} clamped to 0")
            else:
                irreparable.append(
                    f"D_{k}[{row},{col}] = {value:.6g} is negative beyond the repair cap {cap}"
                )
    for index in np.flatnonzero(np.diag(d0) > 0.0):
        value = d0[index, index]
        d0[index, index] = -value
        repairs.append(f"D_0[{index},{index}] = {value:.6g} sign flipped to {-value:.6g}")
    row_sums = np.sum(D, axis=0).sum(axis=1)
    for row in np.flatnonzero(np.abs(row_sums) > tolerance):
        defect = row_sums[row]
        if abs(defect) <= cap:
            old = d0[row, row]
            d0[row, row] = old - defect
            repairs.append(
                f"D_0[{row},{row}] reset from {old:.6g} to {d0[row, row]:.6g} (row-sum defect {defect:.6g})"
            )
        else:
            irreparable.append(
                f"row {row} of D(1) sums to {defect:.6g}, beyond the repair cap {cap}"
            )
    return repairs, irreparable


def validate_bmap(
    D: Sequence[ArrayLike],
    mode: str = "strict",
    repair_cap: Optional[float] = None,
    tolerance: Optional[float] = None,
) -> BatchProcess:
    """Validate BMAP matrices; in repair mode fix small defects and log each."""
    mode = ValidationMode[mode.upper()] if isinstance(mode, str) else mode
    if repair_cap is None:
        repair_cap = config.repair_cap
    if tolerance is None:
        tolerance = config.validation_tolerance
    if len(D) < 2:
        msg = "A batch process needs D_0 and at least one D_k"
        raise ArrivalProcessError(msg)
    matrices = [as_matrix(d).copy() for d in D]
    shape = matrices[0].shape
    if shape[0] != shape[1] or any(d.shape != shape for d in matrices):
        msg = f"All D_k must share one square shape, got {[d.shape for d in matrices]}"
        raise DimensionError(msg)

    repairs: List[str] = []
    if mode is ValidationMode.REPAIR:
        repairs, irreparable = _repair(matrices, repair_cap, tolerance)
        for repair in repairs:
            logger.warning("Repaired %s", repair)
        if irreparable:
            msg = "Irreparable batch process: " + "; ".join(irreparable)
            raise IrreparableModelError(msg, irreparable)

    violations = _strict_violations(matrices, tolerance)
    if violations:
        msg = "Invalid batch process: " + "; ".join(violations)
        raise ArrivalProcessError(msg, violations)
    return BatchProcess(tuple(_frozen(d) for d in matrices), tuple(repairs))


def arrival_stats(bp: BatchProcess) -> ArrivalStats:
    theta = solve_left_null(bp.total)
    ones = np.ones(bp.W)
    rate = float(theta @ bp.derivative @ ones)
    minus_d0 = -bp.D[0]
    group_rate = float(theta @ minus_d0 @ ones)
    inv_e = solve_linear(minus_d0, ones)
    second = 2.0 / group_rate * float(theta @ inv_e)
    variance = second - group_rate**-2
    group_arrivals = bp.total - bp.D[0]
    joint = float(theta @ solve_linear(minus_d0, group_arrivals @ inv_e)) / group_rate
    if variance > 0:
        correlation = (joint - group_rate**-2) / variance
    else:
        correlation = float("nan")
    return ArrivalStats(
        theta=theta,
        rate=rate,
        group_rate=group_rate,
        group_variance=variance,
        correlation=correlation,
    )


def validate_processes(
    modes: Sequence, mode: str, label: str = "mode"
) -> List[BatchProcess]:
    """Validate several matrix lists at once; violations are reported together,
    each prefixed with its label and 1-based index."""
    processes: List[BatchProcess] = []
    violations: List[str] = []
    irreparable = False
    for index, D in enumerate(modes, start=1):
        if isinstance(D, BatchProcess):
            processes.append(D)
            continue
        try:
            processes.append(validate_bmap(D, mode=mode))
        except ArrivalProcessError as exc:
            irreparable = irreparable or isinstance(exc, IrreparableModelError)
            violations.extend(f"{label} {index}: {v}" for v in exc.violations)
    if violations:
        msg = f"{len(violations)} invariant violation(s): " + "; ".join(violations)
        error = IrreparableModelError if irreparable else ArrivalProcessError
        raise error(msg, violations)
    return processes


def _moded(
    D_by_mode: Sequence[Sequence[np.ndarray]], kind: str, repairs: Sequence[str] = ()
) -> ModedArrival:
    processes = validate_processes(D_by_mode, "strict")
    return ModedArrival(tuple(processes), kind=kind, repairs=tuple(repairs))


def compose_direct(modes: Sequence, mode: str = "strict") -> ModedArrival:
    """Mode-l processes given explicitly, as BatchProcess values or matrix lists."""
    if not modes:
        msg = "At least one mode is required"
        raise ValueError(msg)
    processes = validate_processes(modes, mode)
    if len({bp.W for bp in processes}) != 1:
        msg = f"Modes do not share a modulating dimension: {[bp.W for bp in processes]}"
        raise DimensionError(msg)
    repairs = tuple(
        f"mode {index}: {r}"
        for index, bp in enumerate(processes, start=1)
        for r in bp.repairs
    )
    return ModedArrival(tuple(processes), kind="direct", repairs=repairs)


def compose_independent(
    processes: Sequence[BatchProcess],
) -> ModedArrival:
    """Independent robots; mode l activates robots 1..l.

    Inactive robots keep their modulating chain running under D(1)."""
    if not processes:
        msg = "At least one robot process is required"
        raise ValueError(msg)
    kmax = max(bp.kmax for bp in processes)
    D_by_mode = []
    for active in range(1, len(processes) + 1):
        D = []
        for k in range(kmax + 1):
            combined = np.zeros((1, 1))
            for robot, bp in enumerate(processes, start=1):
                if robot <= active:
                    term = bp.batch(k)
                elif k == 0:
                    term = bp.total
                else:
                    term = np.zeros((bp.W, bp.W))
                combined = kron_sum(combined, term)
            D.append(combined)
        D_by_mode.append(D)
    repairs = [
        f"robot {robot}: {r}"
        for robot, bp in enumerate(processes, start=1)
        for r in bp.repairs
    ]
    return _moded(D_by_mode, "independent", repairs)


def compose_thinned(bp: BatchProcess, q: Sequence[float]) -> ModedArrival:
    """Mode l delivers each batch with probability q_l, otherwise the
    modulating transition happens silently."""
    q = np.asarray(q, dtype=float)
    tolerance = config.validation_tolerance
    if (
        q.size == 0
        or q[0] <= 0.0
        or np.any(np.diff(q) <= 0.0)
        or abs(q[-1] - 1.0) > tolerance
    ):
        msg = f"Thinning probabilities must satisfy 0 < q_1 < ... < q_N = 1, got {q.tolist()}"
        raise ValueError(msg)
    total = bp.total
    D_by_mode = []
    for ql in q:
        D = [bp.D[0] * ql + total * (1.0 - ql)]
        D.extend(dk * ql for dk in bp.D[1:])
        D_by_mode.append(D)
    return _moded(D_by_mode, "thinned", bp.repairs)


def compose_bmmap(D0: ArrayLike, Dlk: Sequence[Sequence[ArrayLike]]) -> ModedArrival:
    """Marked process: Dlk[m][k-1] is robot m+1's batch-k matrix.

    In mode l batches of robots m > l are folded into D_0."""
    d0 = as_matrix(D0)
    robots = [[as_matrix(d) for d in row] for row in Dlk]
    if not robots:
        msg = "At least one robot is required"
        raise ValueError(msg)
    kmax = max(len(row) for row in robots)

    def robot_batch(m: int, k: int) -> np.ndarray:
        row = robots[m]
        return row[k - 1] if k <= len(row) else np.zeros_like(d0)

    D_by_mode = []
    for active in range(1, len(robots) + 1):
        folded = d0 + sum(
            (robot_batch(m, k) for m in range(active, len(robots)) for k in range(1, kmax + 1)),
            np.zeros_like(d0),
        )
        D = [folded]
        for k in range(1, kmax + 1):
            D.append(sum((robot_batch(m, k) for m in range(active)), np.zeros_like(d0)))
        D_by_mode.append(D)
    return _moded(D_by_mode, "bmmap")


def compose_scaled(bp: BatchProcess, factors: Sequence[float]) -> ModedArrival:
    """Mode r uses c_r·D_k for every k."""
    factors = np.asarray(factors, dtype=float)
    if factors.size == 0 or factors[0] <= 0.0 or np.any(np.diff(factors) <= 0.0):
        msg = f"Scale factors must be positive and strictly increasing, got {factors.tolist()}"
        raise ValueError(msg)
    D_by_mode = [[c * d for d in bp.D] for c in factors]
    return _moded(D_by_mode, "scaled", bp.repairs)


def batch_map(
    D0: ArrayLike,
    D1: ArrayLike,
    batch_pmf: Sequence[float],
    mode: str = "strict",
) -> BatchProcess:
    """BMAP from a MAP of batch epochs and an i.i.d. batch-size pmf d_1..d_kmax."""
    d1 = as_matrix(D1)
    D = [as_matrix(D0)] + [dk * d1 for dk in batch_pmf]
    return validate_bmap(D, mode=mode)
