"""Sojourn-time transforms and means of an arbitrary page.

The tagged page with i pages ahead of it (one in service, i-1 buffered)
has phase (m, r_1, ..., r_{i-1}, r_own): service phase, the clocks of the
pages ahead oldest first, and its own obsolescence clock last, so the
vectors v_i have dimension M·R^i. v_0 is the page in service itself."""

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Union

import numpy as np

from .config import config
from .generator import QueueModel
from .matrix_core import kron_product, kron_vec_power, solve_linear
from .measures import PerformanceReport, effective_rate, obsolescence_and_success
from .policy import ThresholdPolicy, active_mode
from .stationary_solver import StationarySolution


@dataclass(frozen=True)
class LstVectors:
    """v1[i], v2[i]: transforms of the time to service completion and to
    obsolescence, as defective transforms conditioned on the start phase."""

    u: float
    v1: List[np.ndarray] = field(repr=False)
    v2: List[np.ndarray] = field(repr=False)


@dataclass(frozen=True)
class SojournSummary:
    u: np.ndarray = field(default_factory=lambda: np.zeros(0))
    v_of_u: np.ndarray = field(default_factory=lambda: np.zeros(0))
    v1_of_u: np.ndarray = field(default_factory=lambda: np.zeros(0))
    v2_of_u: np.ndarray = field(default_factory=lambda: np.zeros(0))
    v_bar: Optional[float] = None
    v1_bar: Optional[float] = None
    v2_bar: Optional[float] = None


def tagged_departure_matrix(model: QueueModel, i: int) -> np.ndarray:
    """ℬ̂_{i-1}: the tagged page with i pages ahead moves to i-1 pages ahead.

    For i = 1 the page in service completes and the tagged page enters
    service with β, dropping its clock. Otherwise ℬ̂_{i-1} = ℬ_{i-1} ⊗ I_R."""
    if i == 1:
        S0 = model.service.exit.reshape(-1, 1)
        beta = model.service.init.reshape(1, -1)
        return kron_product(S0 @ beta, np.ones((model.R, 1)))
    return kron_product(model.departure_matrix(i - 1), np.eye(model.R))


def own_obsolescence_vector(model: QueueModel, i: int) -> np.ndarray:
    """(I_{M·R^{i-1}} ⊗ Γ₀)e for i >= 1."""
    return np.kron(np.ones(model.M * model.R ** (i - 1)), model.obsolescence.exit)


def _shifted(model: QueueModel, i: int, u: float) -> np.ndarray:
    a = model.phase_generator(i)
    return u * np.eye(a.shape[0]) - a


def lst_vectors(model: QueueModel, u: float) -> LstVectors:
    if u < 0:
        msg = f"Transform argument must be nonnegative, got {u}"
        raise ValueError(msg)
    M, R = model.M, model.R
    v1 = [solve_linear(_shifted(model, 0, u), model.service.exit)]
    v2 = [np.zeros(M)]
    for i in range(1, model.K):
        shifted = _shifted(model, i, u)
        down = tagged_departure_matrix(model, i)
        v1.append(solve_linear(shifted, down @ v1[i - 1]))
        v2.append(solve_linear(shifted, own_obsolescence_vector(model, i) + down @ v2[i - 1]))
        assert v1[i].shape == (M * R**i,), f"{v1[i].shape} != {(M * R**i,)}"
        assert v2[i].shape == v1[i].shape
    return LstVectors(u=u, v1=v1, v2=v2)


def lst_v2_product_sum(model: QueueModel, u: float, i: int) -> np.ndarray:
    """v2_i as the explicit sum over how many pages ahead leave first:
    Σ_l [Π_{k<l} (uI-𝒜_{i-k})⁻¹ℬ̂_{i-k-1}] (uI-𝒜_{i-l})⁻¹ (I ⊗ Γ₀)e.

    An empty product is the identity."""
    total = np.zeros(model.M * model.R**i)
    for l in range(i):
        vector = solve_linear(_shifted(model, i - l, u), own_obsolescence_vector(model, i - l))
        for k in range(l - 1, -1, -1):
            vector = solve_linear(
                _shifted(model, i - k, u), tagged_departure_matrix(model, i - k) @ vector
            )
        total += vector
    return total


def _mean_vectors(model: QueueModel):
    """w_i = -dv_i/du at u = 0 via w_i = (-𝒜_i)⁻¹[v_i(0) + ℬ̂_{i-1} w_{i-1}]."""
    at_zero = lst_vectors(model, 0.0)
    w1 = [solve_linear(-model.phase_generator(0), np.ones(model.M))]
    w2 = [np.zeros(model.M)]
    for i in range(1, model.K):
        minus_a = -model.phase_generator(i)
        down = tagged_departure_matrix(model, i)
        w1.append(solve_linear(minus_a, at_zero.v1[i] + down @ w1[i - 1]))
        w2.append(solve_linear(minus_a, at_zero.v2[i] + down @ w2[i - 1]))
    return w1, w2


def _mix(
    model: QueueModel,
    pol: ThresholdPolicy,
    sol: StationarySolution,
    rate: float,
    vectors: Sequence[np.ndarray],
) -> float:
    """(1/λ) Σ_i Σ_l (Σ_{k>=l} p_i(𝒟_k e ⊗ I)) 𝒞_{i,l} v_{i+l-1}.

    A page at position l of a batch finding i pages is admitted iff
    l <= K-i and then has i+l-1 pages ahead. 𝒞_{i,l} draws the clocks of
    the l-1 batch-mates ahead and its own from γ; at i = 0 the first page
    of the batch starts service with β instead."""
    K = model.K
    W = model.W
    beta = model.service.init
    gamma = model.obsolescence.init
    ones = np.ones(W)
    total = 0.0
    for i in range(K):
        bp = model.arrival.mode(active_mode(pol, i))
        kmax = bp.kmax
        P_i = sol.p[i].reshape(W, -1)
        for l in range(1, min(K - i, kmax) + 1):
            tail = sum((bp.D[k] @ ones for k in range(l, kmax + 1)), np.zeros(W))
            weight = tail @ P_i
            v = vectors[i + l - 1]
            if i == 0:
                clocks = kron_vec_power(gamma, l - 1).reshape(-1)
                admitted = beta @ (v.reshape(model.M, -1) @ clocks)
                total += float(weight[0] * admitted)
            else:
                clocks = kron_vec_power(gamma, l).reshape(-1)
                total += float(weight @ (v.reshape(P_i.shape[1], -1) @ clocks))
    return total / rate


def _conditional(value: float, probability: float) -> float:
    if probability < config.degenerate_tolerance:
        return float("nan")
    return value / probability


def sojourn_lst(
    model: QueueModel,
    pol: ThresholdPolicy,
    sol: StationarySolution,
    u: Union[float, Sequence[float]],
    report: Optional[PerformanceReport] = None,
) -> SojournSummary:
    """v(u) = v¹(u)P_success + v²(u)P_obs + P_loss with conditional v¹, v²."""
    u_values = np.atleast_1d(np.asarray(u, dtype=float))
    if report is None:
        rate = effective_rate(sol, model, pol)
        p_obs, p_success = obsolescence_and_success(sol, model, pol)
        p_loss = 1.0 - p_obs - p_success
    else:
        rate, p_obs, p_success, p_loss = (
            report.arrival_rate,
            report.p_obs,
            report.p_success,
            report.p_loss,
        )
    v, v1, v2 = [], [], []
    for value in u_values:
        vectors = lst_vectors(model, float(value))
        served = _mix(model, pol, sol, rate, vectors.v1)
        obsolesced = _mix(model, pol, sol, rate, vectors.v2)
        v.append(served + obsolesced + p_loss)
        v1.append(_conditional(served, p_success))
        v2.append(_conditional(obsolesced, p_obs))
    return SojournSummary(
        u=u_values, v_of_u=np.array(v), v1_of_u=np.array(v1), v2_of_u=np.array(v2)
    )


def sojourn_lst_ordinary(
    model: QueueModel,
    pol: ThresholdPolicy,
    sol: StationarySolution,
    u: float,
) -> float:
    """v(u) for single page arrivals: the page finding i < K pages has i ahead."""
    rate = effective_rate(sol, model, pol)
    vectors = lst_vectors(model, u)
    beta = model.service.init
    gamma = model.obsolescence.init
    ones = np.ones(model.W)
    admitted = 0.0
    for i in range(model.K):
        bp = model.arrival.mode(active_mode(pol, i))
        arrivals = bp.batch(1) @ ones
        both = vectors.v1[i] + vectors.v2[i]
        if i == 0:
            admitted += float(sol.p[0] @ arrivals) * float(beta @ both)
        else:
            weight = arrivals @ sol.p[i].reshape(model.W, -1)
            admitted += float(weight @ (both.reshape(weight.shape[0], -1) @ gamma))
    q_K = sol.p[model.K].reshape(model.W, -1).sum(axis=1)
    lost = float(q_K @ model.arrival.mode(active_mode(pol, model.K)).batch(1) @ ones)
    return (admitted + lost) / rate


def mean_sojourns(
    model: QueueModel,
    pol: ThresholdPolicy,
    sol: StationarySolution,
    report: Optional[PerformanceReport] = None,
) -> SojournSummary:
    """V̄ over all pages (lost pages stay zero time), V̄¹ given service, V̄² given obsolescence."""
    if report is None:
        rate = effective_rate(sol, model, pol)
        p_obs, p_success = obsolescence_and_success(sol, model, pol)
    else:
        rate, p_obs, p_success = report.arrival_rate, report.p_obs, report.p_success
    w1, w2 = _mean_vectors(model)
    served = _mix(model, pol, sol, rate, w1)
    obsolesced = _mix(model, pol, sol, rate, w2)
    return SojournSummary(
        v_bar=served + obsolesced,
        v1_bar=_conditional(served, p_success),
        v2_bar=_conditional(obsolesced, p_obs),
    )


def lst_function(
    model: QueueModel, pol: ThresholdPolicy, sol: StationarySolution
) -> Callable[[float], float]:
    """u -> v(u), for finite-difference checks."""

    def v_of_u(u: float) -> float:
        return float(sojourn_lst(model, pol, sol, u).v_of_u[0])

    return v_of_u
