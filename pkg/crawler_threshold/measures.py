"""Stationary performance measures of a solved (model, policy) pair."""

import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .generator import QueueModel
from .matrix_core import kron_sum_power_col
from .policy import ThresholdPolicy, active_mode
from .stationary_solver import StationarySolution

logger = logging.getLogger(__name__)

# The closed-form loss and its batch decomposition differ by round-off only
LOSS_AGREEMENT_TOLERANCE = 1e-10


@dataclass(frozen=True)
class PerformanceReport:
    p_star: float
    phi: np.ndarray = field(repr=False)
    n_act: float
    arrival_rate: float
    p_loss: float
    p_obs: float
    p_success: float
    mean_queue_length: float
    level_probabilities: np.ndarray = field(repr=False)
    v_bar: Optional[float] = None
    v1_bar: Optional[float] = None
    v2_bar: Optional[float] = None

    @property
    def is_complete(self) -> bool:
        return None not in (self.v_bar, self.v1_bar, self.v2_bar)

    def as_dict(self) -> dict:
        result = {
            "p_star": self.p_star,
            "n_act": self.n_act,
            "lambda": self.arrival_rate,
            "p_loss": self.p_loss,
            "p_obs": self.p_obs,
            "p_success": self.p_success,
            "mean_queue_length": self.mean_queue_length,
            "v_bar": self.v_bar,
            "v1_bar": self.v1_bar,
            "v2_bar": self.v2_bar,
        }
        result.update({f"phi_{n}": float(v) for n, v in enumerate(self.phi, start=1)})
        return result


def modulating_marginals(sol: StationarySolution, model: QueueModel) -> Tuple[np.ndarray, ...]:
    """Per level, the W-vector p_i(e_W ⊗ ...)ᵀ summed over service and clocks."""
    return tuple(p_i.reshape(model.W, -1).sum(axis=1) for p_i in sol.p)


def starvation(sol: StationarySolution, model: QueueModel) -> float:  # noqa: ARG001
    return float(sol.p[0].sum())


def active_robots(
    sol: StationarySolution, model: QueueModel, pol: ThresholdPolicy
) -> Tuple[np.ndarray, float]:
    levels = sol.level_probabilities()
    phi = np.zeros(model.N)
    for i, probability in enumerate(levels):
        phi[active_mode(pol, i) - 1] += probability
    n_act = float(np.arange(1, model.N + 1) @ phi)
    return phi, n_act


def effective_rate(
    sol: StationarySolution, model: QueueModel, pol: ThresholdPolicy
) -> float:
    ones = np.ones(model.W)
    rate = 0.0
    for i, q_i in enumerate(modulating_marginals(sol, model)):
        bp = model.arrival.mode(active_mode(pol, i))
        rate += float(q_i @ bp.derivative @ ones)
    return rate


def loss_probability_formula(
    sol: StationarySolution, model: QueueModel, pol: ThresholdPolicy
) -> float:
    """1 - λ⁻¹ Σ_i p_i Σ_{k=0}^{K-i} (k-K+i)(𝒟_k ⊗ I)e."""
    K = model.K
    ones = np.ones(model.W)
    rate = effective_rate(sol, model, pol)
    accepted = 0.0
    for i, q_i in enumerate(modulating_marginals(sol, model)):
        bp = model.arrival.mode(active_mode(pol, i))
        for k in range(min(K - i, bp.kmax) + 1):
            accepted += (k - K + i) * float(q_i @ bp.D[k] @ ones)
    return 1.0 - accepted / rate


def loss_probability_decomposed(
    sol: StationarySolution, model: QueueModel, pol: ThresholdPolicy
) -> float:
    """Σ_k P_k Σ_i P_i^(k) (1 - Φ_i^(k)) over batch sizes k.

    P_k is the chance an arbitrary page arrives in a batch of k, P_i^(k) the
    chance such a batch finds i pages and Φ = min(k, K-i)/k the admitted share."""
    K = model.K
    ones = np.ones(model.W)
    rate = effective_rate(sol, model, pol)
    marginals = modulating_marginals(sol, model)
    batch_rates = np.zeros((K + 1, model.arrival.kmax + 1))
    for i, q_i in enumerate(marginals):
        bp = model.arrival.mode(active_mode(pol, i))
        for k in range(1, bp.kmax + 1):
            batch_rates[i, k] = float(q_i @ bp.D[k] @ ones)
    loss = 0.0
    for k in range(1, batch_rates.shape[1]):
        page_share = k * batch_rates[:, k].sum() / rate
        if page_share <= 0.0:
            continue
        level_share = k * batch_rates[:, k] / (rate * page_share)
        admitted = np.minimum(k, K - np.arange(K + 1)) / k
        loss += page_share * float(level_share @ (1.0 - admitted))
    return loss


def loss_probability(
    sol: StationarySolution, model: QueueModel, pol: ThresholdPolicy
) -> float:
    formula = loss_probability_formula(sol, model, pol)
    decomposed = loss_probability_decomposed(sol, model, pol)
    if abs(formula - decomposed) > LOSS_AGREEMENT_TOLERANCE:
        logger.warning(
            "Loss formula gives %.12g but the batch decomposition gives %.12g; using the decomposition",
            formula,
            decomposed,
        )
        return decomposed
    return formula


def loss_probability_ordinary(
    sol: StationarySolution, model: QueueModel, pol: ThresholdPolicy
) -> float:
    """Single page arrivals: only arrivals to a full system are lost."""
    q_K = modulating_marginals(sol, model)[model.K]
    bp = model.arrival.mode(active_mode(pol, model.K))
    return float(q_K @ bp.batch(1) @ np.ones(model.W)) / effective_rate(sol, model, pol)


def obsolescence_rate_vector(model: QueueModel, i: int) -> np.ndarray:
    """(I_W ⊗ I_M ⊗ Γ₀^{⊕(i-1)})e at level i >= 2."""
    clocks = kron_sum_power_col(model.obsolescence.exit, i - 1).sum(axis=1)
    return np.tile(clocks, model.W * model.M)


def service_rate_vector(model: QueueModel, i: int) -> np.ndarray:
    """(I_W ⊗ S₀ ⊗ I_{R^{i-1}})e at level i >= 1."""
    return np.kron(
        np.ones(model.W), np.kron(model.service.exit, np.ones(model.R ** (i - 1)))
    )


def obsolescence_and_success(
    sol: StationarySolution, model: QueueModel, pol: ThresholdPolicy
) -> Tuple[float, float]:
    rate = effective_rate(sol, model, pol)
    obsolesced = sum(
        float(sol.p[i] @ obsolescence_rate_vector(model, i)) for i in range(2, model.K + 1)
    )
    served = sum(
        float(sol.p[i] @ service_rate_vector(model, i)) for i in range(1, model.K + 1)
    )
    return obsolesced / rate, served / rate


def performance_report(
    sol: StationarySolution, model: QueueModel, pol: ThresholdPolicy
) -> PerformanceReport:
    """Every measure except the sojourn means, from one solution."""
    levels = sol.level_probabilities()
    phi, n_act = active_robots(sol, model, pol)
    p_obs, p_success = obsolescence_and_success(sol, model, pol)
    return PerformanceReport(
        p_star=starvation(sol, model),
        phi=phi,
        n_act=n_act,
        arrival_rate=effective_rate(sol, model, pol),
        p_loss=loss_probability(sol, model, pol),
        p_obs=p_obs,
        p_success=p_success,
        mean_queue_length=float(np.arange(len(levels)) @ levels),
        level_probabilities=levels,
    )
