import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Tuple, Union

import numpy as np

from .config import config
from .errors import StationarySolutionError, WrongSolverError
from .generator import BlockGenerator, assemble_dense
from .matrix_core import solve_left_null, solve_linear, solve_linear_left

logger = logging.getLogger(__name__)

solver_methods = [
    ("AUTO", "auto"),
    ("GENERAL", "general"),
    ("QBD", "qbd"),
    ("DENSE", "dense"),
]
solver_methods_values = [m[1] for m in solver_methods]
SolverMethod = Enum("SolverMethod", solver_methods)


@dataclass(eq=False)
class StationarySolution:
    """Stationary row vectors p_i per level."""

    p: Tuple[np.ndarray, ...]
    residual: float
    method: str

    @property
    def K(self) -> int:
        return len(self.p) - 1

    def level_probabilities(self) -> np.ndarray:
        """p_i·e for i = 0..K."""
        return np.array([p_i.sum() for p_i in self.p])


def residual(bg: BlockGenerator, p: Tuple[np.ndarray, ...]) -> float:
    """max |pQ| computed blockwise."""
    flux = [np.zeros(d) for d in bg.level_dims]
    for (i, j), block in bg.blocks.items():
        flux[j] += p[i] @ block
    return float(max(np.abs(f).max() for f in flux))


def _finish(bg: BlockGenerator, p: List[np.ndarray], method: str) -> StationarySolution:
    tolerance = config.negative_tolerance
    smallest = min(p_i.min() for p_i in p)
    if smallest < -tolerance:
        msg = f"Stationary vector has a negative entry {smallest:.3g} beyond -{tolerance:g}"
        raise StationarySolutionError(msg)
    if smallest < 0.0:
        p = [np.clip(p_i, 0.0, None) for p_i in p]
    total = sum(p_i.sum() for p_i in p)
    p = tuple(p_i / total for p_i in p)
    value = residual(bg, p)
    if value > config.residual_tolerance:
        msg = f"Stationary residual {value:.3g} exceeds {config.residual_tolerance:g}"
        raise StationarySolutionError(msg)
    logger.debug("Solved %d states by %s, residual %.3g", bg.num_states, method, value)
    return StationarySolution(p=p, residual=value, method=method)


def solve_general(bg: BlockGenerator) -> StationarySolution:
    """Backward G recursion, censored blocks Q̄, forward F recursion, then
    the level-0 boundary system with p_0·Σ F_l·e = 1."""
    K = bg.K
    dims = bg.level_dims

    # G[i]: first passage from level i+1 down to level i
    G: List[np.ndarray] = [None] * K  # type: ignore[list-item]
    for i in range(K - 1, -1, -1):
        lhs = -bg.block(i + 1, i + 1)
        chain = np.eye(dims[i + 1])
        for step in range(1, K - i):
            chain = G[i + step] @ chain
            if bg.has_block(i + 1, i + 1 + step):
                lhs = lhs - bg.block(i + 1, i + 1 + step) @ chain
        G[i] = solve_linear(lhs, bg.block(i + 1, i))

    # Q̄[i][l] = Q_{i,l} + Q̄_{i,l+1} G_l for l >= i, with Q̄_{i,K} = Q_{i,K}
    Qbar: Dict[Tuple[int, int], np.ndarray] = {}
    for i in range(K + 1):
        Qbar[(i, K)] = bg.block(i, K)
        for l in range(K - 1, i - 1, -1):
            Qbar[(i, l)] = bg.block(i, l) + Qbar[(i, l + 1)] @ G[l]

    F: List[np.ndarray] = [np.eye(dims[0])]
    for l in range(1, K + 1):
        inflow = sum(F[i] @ Qbar[(i, l)] for i in range(l))
        F.append(solve_linear_left(inflow, -Qbar[(l, l)]))

    normalization = sum(F_l.sum(axis=1) for F_l in F)
    p0 = solve_left_null(Qbar[(0, 0)], normalization=normalization)
    return _finish(bg, [p0 @ F_l for F_l in F], "general")


def solve_qbd(bg: BlockGenerator) -> StationarySolution:
    """Block-tridiagonal specialization for ordinary (single page) arrivals."""
    if not bg.is_tridiagonal:
        msg = "The generator has batch transitions; use the general solver"
        raise WrongSolverError(msg)
    K = bg.K

    G: List[np.ndarray] = [None] * K  # type: ignore[list-item]
    G[K - 1] = solve_linear(-bg.block(K, K), bg.block(K, K - 1))
    for i in range(K - 2, -1, -1):
        lhs = -(bg.block(i + 1, i + 1) + bg.block(i + 1, i + 2) @ G[i + 1])
        G[i] = solve_linear(lhs, bg.block(i + 1, i))

    F: List[np.ndarray] = [np.eye(bg.level_dims[0])]
    for i in range(1, K + 1):
        diagonal = bg.block(i, i)
        if i < K:
            diagonal = diagonal + bg.block(i, i + 1) @ G[i]
        F.append(solve_linear_left(F[i - 1] @ bg.block(i - 1, i), -diagonal))

    boundary = bg.block(0, 0) + bg.block(0, 1) @ G[0]
    normalization = sum(F_i.sum(axis=1) for F_i in F)
    p0 = solve_left_null(boundary, normalization=normalization)
    return _finish(bg, [p0 @ F_i for F_i in F], "qbd")


def solve_dense(bg: BlockGenerator) -> StationarySolution:
    """Left null vector of the assembled generator."""
    flat = solve_left_null(assemble_dense(bg))
    offsets = (*bg.offsets, bg.num_states)
    p = [flat[offsets[i] : offsets[i + 1]] for i in range(bg.K + 1)]
    return _finish(bg, p, "dense")


def solve(
    bg: BlockGenerator, method: Union[str, SolverMethod] = "auto"
) -> StationarySolution:
    if isinstance(method, str):
        if method not in solver_methods_values:
            msg = f"Unknown solver {method!r}, expected one of {solver_methods_values}"
            raise ValueError(msg)
        method = SolverMethod(method)
    if method is SolverMethod.AUTO:
        method = SolverMethod.QBD if bg.is_tridiagonal else SolverMethod.GENERAL
    if method is SolverMethod.QBD:
        return solve_qbd(bg)
    if method is SolverMethod.DENSE:
        return solve_dense(bg)
    return solve_general(bg)
