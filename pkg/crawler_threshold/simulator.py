"""Discrete-event simulation of the controlled queue.

Pages in the buffer carry their own obsolescence deadline; the page in
service never obsolesces. The modulating chain follows the matrices of
the mode active at the current queue length and its running sojourn is
re-drawn whenever the mode changes."""

import heapq
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import stats

from .distributions import PhaseType
from .generator import QueueModel
from .policy import ThresholdPolicy, active_mode

logger = logging.getLogger(__name__)

MIN_ARRIVALS = 10_000

_ESTIMATES = (
    "p_star",
    "p_loss",
    "p_obs",
    "p_success",
    "n_act",
    "arrival_rate",
    "v1_bar",
    "v2_bar",
    "mean_queue_length",
)


@dataclass(frozen=True)
class SimConfig:
    n_arrivals: int = 10**6
    warmup: float = 0.1
    seed: int = 0
    n_batches: int = 30
    confidence: float = 0.99
    record_trace: bool = False

    def __post_init__(self):
        if self.n_arrivals < MIN_ARRIVALS:
            msg = f"n_arrivals must be at least {MIN_ARRIVALS}, got {self.n_arrivals}"
            raise ValueError(msg)
        if not 0.0 <= self.warmup < 1.0:
            msg = f"warmup must lie in [0, 1), got {self.warmup}"
            raise ValueError(msg)
        if self.n_batches < 2:
            msg = f"At least two batches are needed for a confidence interval, got {self.n_batches}"
            raise ValueError(msg)
        if not 0.0 < self.confidence < 1.0:
            msg = f"confidence must lie in (0, 1), got {self.confidence}"
            raise ValueError(msg)


@dataclass(frozen=True)
class Estimate:
    value: float
    half_width: float

    def covers(self, target: float, widen: float = 1.0) -> bool:
        return abs(self.value - target) <= widen * self.half_width


@dataclass(frozen=True)
class SimReport:
    p_star: Estimate
    p_loss: Estimate
    p_obs: Estimate
    p_success: Estimate
    n_act: Estimate
    arrival_rate: Estimate
    v1_bar: Estimate
    v2_bar: Estimate
    mean_queue_length: Estimate
    arrived: int
    admitted: int
    lost: int
    served: int
    obsolesced: int
    in_system_at_end: int
    # (time, queue length, mode) after every event
    mode_trace: Tuple[Tuple[float, int, int], ...] = field(default=(), repr=False)

    def as_dict(self) -> dict:
        result = {}
        for name in _ESTIMATES:
            estimate = getattr(self, name)
            result[name] = estimate.value
            result[f"{name}_half_width"] = estimate.half_width
        for name in ("arrived", "admitted", "lost", "served", "obsolesced", "in_system_at_end"):
            result[name] = getattr(self, name)
        return result


class _PhSampler:
    """Absorption-time sampler with per-phase jump tables."""

    def __init__(self, ph: PhaseType):
        subgen = ph.subgen
        self.order = ph.order
        self.init_cumulative = np.cumsum(ph.init)
        self.rates = -np.diag(subgen)
        jumps = np.array(subgen, dtype=float)
        np.fill_diagonal(jumps, 0.0)
        # Column `order` is absorption
        table = np.hstack([jumps, ph.exit.reshape(-1, 1)]) / self.rates.reshape(-1, 1)
        self.jump_cumulative = np.cumsum(table, axis=1)

    def _pick(self, cumulative: np.ndarray, u: float) -> int:
        return min(int(np.searchsorted(cumulative, u * cumulative[-1], side="right")), len(cumulative) - 1)

    def draw(self, rng: np.random.Generator) -> float:
        phase = self._pick(self.init_cumulative, rng.random())
        duration = 0.0
        while phase < self.order:
            duration += rng.exponential(1.0 / self.rates[phase])
            phase = self._pick(self.jump_cumulative[phase], rng.random())
        return duration


def sample_ph(ph: PhaseType, rng: np.random.Generator, size: Optional[int] = None):
    """One PH(init, subgen) duration, or an array of ``size`` of them."""
    sampler = _PhSampler(ph)
    if size is None:
        return sampler.draw(rng)
    return np.array([sampler.draw(rng) for _ in range(size)])


class _ModulatingSampler:
    """Sojourn rates and (batch size, next state) tables of one mode."""

    def __init__(self, D: Tuple[np.ndarray, ...]):
        W = D[0].shape[0]
        self.W = W
        self.rates = -np.diag(D[0])
        silent = np.array(D[0], dtype=float)
        np.fill_diagonal(silent, 0.0)
        stacked = np.hstack([silent, *D[1:]])
        self.cumulative = np.cumsum(stacked, axis=1)

    def sojourn(self, state: int, rng: np.random.Generator) -> float:
        rate = self.rates[state]
        if rate <= 0.0:
            return math.inf
        return rng.exponential(1.0 / rate)

    def transition(self, state: int, rng: np.random.Generator) -> Tuple[int, int]:
        row = self.cumulative[state]
        index = min(int(np.searchsorted(row, rng.random() * row[-1], side="right")), len(row) - 1)
        return index // self.W, index % self.W


class _Accumulator:
    def __init__(self):
        self.time = 0.0
        self.empty_time = 0.0
        self.active_area = 0.0
        self.queue_area = 0.0
        self.arrived = 0
        self.lost = 0
        self.served = 0
        self.obsolesced = 0
        self.served_sojourn = 0.0
        self.obsolesced_sojourn = 0.0

    def advance(self, dt: float, level: int, mode: int):
        self.time += dt
        if level == 0:
            self.empty_time += dt
        self.active_area += mode * dt
        self.queue_area += level * dt

    def values(self) -> Dict[str, float]:
        def ratio(a, b):
            return a / b if b > 0 else float("nan")

        return {
            "p_star": ratio(self.empty_time, self.time),
            "p_loss": ratio(self.lost, self.arrived),
            "p_obs": ratio(self.obsolesced, self.arrived),
            "p_success": ratio(self.served, self.arrived),
            "n_act": ratio(self.active_area, self.time),
            "arrival_rate": ratio(self.arrived, self.time),
            "v1_bar": ratio(self.served_sojourn, self.served),
            "v2_bar": ratio(self.obsolesced_sojourn, self.obsolesced),
            "mean_queue_length": ratio(self.queue_area, self.time),
        }


def _batch_means(batches: List[Dict[str, float]], confidence: float) -> Dict[str, Estimate]:
    result = {}
    for name in _ESTIMATES:
        values = np.array([b[name] for b in batches])
        values = values[np.isfinite(values)]
        if values.size == 0:
            result[name] = Estimate(float("nan"), float("nan"))
            continue
        if values.size < 2:
            result[name] = Estimate(float(values[0]), float("nan"))
            continue
        quantile = stats.t.ppf(0.5 + confidence / 2.0, values.size - 1)
        half_width = quantile * values.std(ddof=1) / math.sqrt(values.size)
        result[name] = Estimate(float(values.mean()), float(half_width))
    return result


def simulate(model: QueueModel, pol: ThresholdPolicy, cfg: Optional[SimConfig] = None) -> SimReport:
    """Batch-means estimates of the stationary measures from one run."""
    cfg = SimConfig() if cfg is None else cfg
    if pol.K != model.K or max(pol.modes) > model.N:
        msg = f"Policy {pol} does not fit a model with K={model.K} and N={model.N}"
        raise ValueError(msg)
    logger.info("Modulating sojourns are re-drawn from the new mode's rates on every mode switch")

    arrival_rng, service_rng, obsolescence_rng = (
        np.random.default_rng(s) for s in np.random.SeedSequence(cfg.seed).spawn(3)
    )
    service = _PhSampler(model.service)
    obsolescence = _PhSampler(model.obsolescence)
    modulating = {r: _ModulatingSampler(model.arrival.mode(r).D) for r in set(pol.modes)}
    modes = [active_mode(pol, i) for i in range(model.K + 1)]

    warmup_events = int(cfg.warmup * cfg.n_arrivals)
    batch_events = (cfg.n_arrivals - warmup_events) // cfg.n_batches
    batches: List[Dict[str, float]] = []
    window = _Accumulator()
    window_events = 0
    measuring = warmup_events == 0

    t = 0.0
    state = 0
    mode = modes[0]
    next_modulating = modulating[mode].sojourn(state, arrival_rng)
    busy = False
    in_service_arrival = 0.0
    next_service = math.inf
    # page id -> (admission time, deadline), in arrival order
    buffer: Dict[int, Tuple[float, float]] = {}
    deadlines: List[Tuple[float, int]] = []
    next_page = 0
    events = 0
    counters = dict(arrived=0, admitted=0, lost=0, served=0, obsolesced=0)
    trace: List[Tuple[float, int, int]] = []

    def level() -> int:
        return int(busy) + len(buffer)

    while events < cfg.n_arrivals:
        while deadlines and deadlines[0][1] not in buffer:
            heapq.heappop(deadlines)
        next_obsolescence = deadlines[0][0] if deadlines else math.inf
        t_next = min(next_modulating, next_service, next_obsolescence)
        if math.isinf(t_next):
            msg = "The simulated system has no pending events"
            raise RuntimeError(msg)
        window.advance(t_next - t, level(), mode)
        t = t_next

        if t == next_modulating:
            k, state = modulating[mode].transition(state, arrival_rng)
            if k > 0:
                events += 1
                admitted = min(k, model.K - level())
                counters["arrived"] += k
                counters["admitted"] += admitted
                counters["lost"] += k - admitted
                window.arrived += k
                window.lost += k - admitted
                window_events += 1
                for _ in range(admitted):
                    if not busy:
                        busy = True
                        in_service_arrival = t
                        next_service = t + service.draw(service_rng)
                    else:
                        deadline = t + obsolescence.draw(obsolescence_rng)
                        buffer[next_page] = (t, deadline)
                        heapq.heappush(deadlines, (deadline, next_page))
                        next_page += 1
            mode = modes[level()]
            next_modulating = t + modulating[mode].sojourn(state, arrival_rng)
        elif t == next_service:
            counters["served"] += 1
            window.served += 1
            window.served_sojourn += t - in_service_arrival
            if buffer:
                page = next(iter(buffer))
                in_service_arrival, _ = buffer.pop(page)
                next_service = t + service.draw(service_rng)
            else:
                busy = False
                next_service = math.inf
        else:
            _, page = heapq.heappop(deadlines)
            admitted_at, _ = buffer.pop(page)
            counters["obsolesced"] += 1
            window.obsolesced += 1
            window.obsolesced_sojourn += t - admitted_at

        new_mode = modes[level()]
        if new_mode != mode:
            mode = new_mode
            next_modulating = t + modulating[mode].sojourn(state, arrival_rng)
        if cfg.record_trace:
            trace.append((t, level(), mode))

        if not measuring and events >= warmup_events:
            measuring = True
            window, window_events = _Accumulator(), 0
        elif measuring and window_events >= batch_events and len(batches) < cfg.n_batches:
            batches.append(window.values())
            window, window_events = _Accumulator(), 0

    estimates = _batch_means(batches, cfg.confidence)
    logger.debug("Simulated %d batch arrivals up to time %.6g", events, t)
    return SimReport(
        **estimates,
        **counters,
        in_system_at_end=level(),
        mode_trace=tuple(trace),
    )
