"""Level-structured generator of the queue-length / phase chain.

Level i holds i pages. Its phase is (ν, m, r_1, ..., r_{i-1}): the
modulating state, the service phase of the page in service and the
obsolescence phases of the buffered pages, oldest first. Level 0 holds ν
only. Newly admitted pages append their clocks on the right."""

from dataclasses import dataclass
from functools import cached_property
from typing import Dict, List, Optional, Tuple

import numpy as np

from .arrivals import ModedArrival
from .config import config
from .distributions import PhaseType
from .errors import DimensionError, ModelError, StateSpaceError
from .matrix_core import (
    kron_product,
    kron_sum,
    kron_sum_power_col,
    kron_sum_power_sq,
    kron_vec_power,
)
from .policy import ThresholdPolicy, active_mode


@dataclass(eq=False)
class QueueModel:
    arrival: ModedArrival
    service: PhaseType
    obsolescence: PhaseType
    # Buffer of K-1 pages plus the server
    K: int

    def __post_init__(self):
        if self.K < 2:
            msg = f"Capacity K must be at least 2, got {self.K}"
            raise ModelError(msg)

    @property
    def N(self) -> int:
        return self.arrival.N

    @property
    def W(self) -> int:
        return self.arrival.W

    @property
    def M(self) -> int:
        return self.service.order

    @property
    def R(self) -> int:
        return self.obsolescence.order

    def level_dims(self) -> Tuple[int, ...]:
        """d_0 = W, d_i = W·M·R^{i-1}."""
        return (self.W,) + tuple(
            self.W * self.M * self.R ** (i - 1) for i in range(1, self.K + 1)
        )

    @property
    def num_states(self) -> int:
        return sum(self.level_dims())

    def check_size(self, cap: Optional[int] = None):
        cap = config.max_states if cap is None else cap
        if self.num_states > cap:
            msg = (
                f"The chain has {self.num_states} states, above the cap of {cap}; "
                f"level dimensions grow as R^(i-1) with R={self.R}, so reduce K={self.K} "
                "or the obsolescence order"
            )
            raise StateSpaceError(msg)

    @cached_property
    def _phase_blocks(self) -> Tuple[List[np.ndarray], List[Optional[np.ndarray]]]:
        S = self.service.subgen
        Gamma = self.obsolescence.subgen
        S0 = self.service.exit.reshape(-1, 1)
        Gamma0 = self.obsolescence.exit
        beta = self.service.init.reshape(1, -1)
        e_R = np.ones((self.R, 1))
        generators = [S]
        departures: List[Optional[np.ndarray]] = [None]
        for i in range(1, self.K):
            generators.append(kron_sum(S, kron_sum_power_sq(Gamma, i)))
            served = kron_product(
                kron_product(S0 @ beta, e_R), np.eye(self.R ** (i - 1))
            )
            obsolete = kron_product(np.eye(self.M), kron_sum_power_col(Gamma0, i))
            departures.append(served + obsolete)
        return generators, departures

    def phase_generator(self, i: int) -> np.ndarray:
        """𝒜_i = S ⊕ Γ^{⊕i}, the in-level generator with i clocks running."""
        return self._phase_blocks[0][i]

    def departure_matrix(self, i: int) -> np.ndarray:
        """ℬ_i = S₀β ⊗ e_R ⊗ I_{R^{i-1}} + I_M ⊗ Γ₀^{⊕i}, for 1 <= i <= K-1."""
        if not 1 <= i <= self.K - 1:
            msg = f"ℬ_i is defined for 1 <= i <= {self.K - 1}, got {i}"
            raise ValueError(msg)
        return self._phase_blocks[1][i]


@dataclass(eq=False)
class BlockGenerator:
    blocks: Dict[Tuple[int, int], np.ndarray]
    level_dims: Tuple[int, ...]

    @property
    def K(self) -> int:
        return len(self.level_dims) - 1

    @property
    def num_states(self) -> int:
        return sum(self.level_dims)

    @property
    def offsets(self) -> Tuple[int, ...]:
        return tuple(np.concatenate(([0], np.cumsum(self.level_dims)[:-1])).tolist())

    def block(self, i: int, j: int) -> np.ndarray:
        if (i, j) in self.blocks:
            return self.blocks[(i, j)]
        return np.zeros((self.level_dims[i], self.level_dims[j]))

    def has_block(self, i: int, j: int) -> bool:
        return (i, j) in self.blocks

    @property
    def is_tridiagonal(self) -> bool:
        return all(j <= i + 1 for i, j in self.blocks)


def build_generator(model: QueueModel, pol: ThresholdPolicy) -> BlockGenerator:
    if pol.K != model.K:
        msg = f"Policy capacity {pol.K} does not match model capacity {model.K}"
        raise DimensionError(msg)
    if max(pol.modes) > model.N:
        msg = f"Policy uses mode {max(pol.modes)} but the model has {model.N} modes"
        raise DimensionError(msg)
    model.check_size()

    K = model.K
    W, M = model.W, model.M
    beta = model.service.init.reshape(1, -1)
    gamma = model.obsolescence.init
    S0 = model.service.exit.reshape(-1, 1)
    dims = model.level_dims()
    blocks: Dict[Tuple[int, int], np.ndarray] = {}

    def put(i: int, j: int, value: np.ndarray):
        if np.any(value):
            assert value.shape == (dims[i], dims[j]), f"{value.shape} != {(dims[i], dims[j])}"
            blocks[(i, j)] = value

    for i in range(K + 1):
        bp = model.arrival.mode(active_mode(pol, i))
        if i == 0:
            put(0, 0, np.array(bp.D[0]))
            for j in range(1, K + 1):
                # Batches that overflow the buffer are truncated to K pages
                arrivals = bp.batch(j) if j < K else bp.tail(K)
                put(0, j, kron_product(kron_product(arrivals, beta), kron_vec_power(gamma, j - 1)))
            continue

        inner = M * model.R ** (i - 1)
        down = S0 if i == 1 else model.departure_matrix(i - 1)
        put(i, i - 1, kron_product(np.eye(W), down))
        stay = bp.D[0] if i < K else bp.total
        put(i, i, kron_sum(stay, model.phase_generator(i - 1)))
        for step in range(1, K - i + 1):
            arrivals = bp.batch(step) if step < K - i else bp.tail(K - i)
            put(
                i,
                i + step,
                kron_product(kron_product(arrivals, np.eye(inner)), kron_vec_power(gamma, step)),
            )
    return BlockGenerator(blocks=blocks, level_dims=dims)


def assemble_dense(bg: BlockGenerator, cap: Optional[int] = None) -> np.ndarray:
    cap = config.dense_cap if cap is None else cap
    if bg.num_states > cap:
        msg = f"Dense generator of order {bg.num_states} exceeds the cap of {cap}"
        raise StateSpaceError(msg)
    offsets = bg.offsets
    Q = np.zeros((bg.num_states, bg.num_states))
    for (i, j), block in bg.blocks.items():
        rows, cols = block.shape
        Q[offsets[i] : offsets[i] + rows, offsets[j] : offsets[j] + cols] = block
    return Q
