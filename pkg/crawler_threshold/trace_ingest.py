"""Crawler timestamp traces to batch statistics."""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Tuple, Union

import numpy as np
from numpy.typing import ArrayLike

from .errors import TraceError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TraceStats:
    n_batches: int
    mean_interarrival: float
    var_interarrival: float
    lag_corr: np.ndarray = field(repr=False)
    batch_pmf: np.ndarray = field(repr=False)
    mean_batch: float

    def as_dict(self) -> dict:
        result = {
            "n_batches": self.n_batches,
            "mean_interarrival": self.mean_interarrival,
            "var_interarrival": self.var_interarrival,
            "mean_batch": self.mean_batch,
        }
        result.update({f"lag_{k}": float(c) for k, c in enumerate(self.lag_corr, start=1)})
        result.update({f"d_{k}": float(d) for k, d in enumerate(self.batch_pmf, start=1)})
        return result


@dataclass(frozen=True)
class IngestReport:
    stats: TraceStats
    n_timestamps: int
    n_censored: int
    n_pages: int


def interarrivals(timestamps: ArrayLike) -> np.ndarray:
    times = np.asarray(timestamps, dtype=float)
    if times.ndim != 1 or times.size < 2:
        msg = f"At least two timestamps are required, got {times.size}"
        raise TraceError(msg)
    gaps = np.diff(times)
    if np.any(gaps < 0):
        first = int(np.argmax(gaps < 0))
        msg = f"Timestamps decrease at position {first + 1}: {times[first]} > {times[first + 1]}"
        raise TraceError(msg)
    return gaps


def censor(durations: ArrayLike, cutoff: float) -> Tuple[np.ndarray, int]:
    """Drop durations above ``cutoff``; returns the kept ones and the count removed."""
    if cutoff <= 0:
        msg = f"cutoff must be positive, got {cutoff}"
        raise ValueError(msg)
    durations = np.asarray(durations, dtype=float)
    kept = durations[durations <= cutoff]
    if kept.size == 0 and durations.size > 0:
        logger.warning("Every one of %d durations exceeds the cutoff %g", durations.size, cutoff)
    return kept, int(durations.size - kept.size)


def batchify(durations: ArrayLike, epsilon: float) -> Tuple[np.ndarray, np.ndarray]:
    """Collapse runs of gaps shorter than ``epsilon`` into batches.

    A run of r short gaps joins r+1 arrivals into one batch; every gap of at
    least ``epsilon`` separates two batches and is kept as a batch gap."""
    if epsilon <= 0:
        msg = f"epsilon must be positive, got {epsilon}"
        raise ValueError(msg)
    durations = np.asarray(durations, dtype=float)
    separating = durations >= epsilon
    gaps = durations[separating]
    # Arrival j+1 starts a new batch iff gap j separates
    starts = np.concatenate([[0], np.flatnonzero(separating) + 1])
    sizes = np.diff(np.append(starts, durations.size + 1))
    return gaps, sizes


def _autocorrelation(x: np.ndarray, max_lag: int) -> np.ndarray:
    centered = x - x.mean()
    denominator = float(centered @ centered)
    if denominator == 0.0:
        logger.warning("Batch gaps have zero variance; lag correlations are undefined")
        return np.full(max_lag, np.nan)
    return np.array(
        [float(centered[:-lag] @ centered[lag:]) / denominator for lag in range(1, max_lag + 1)]
    )


def empirical_stats(
    batch_gaps: ArrayLike, batch_sizes: ArrayLike, max_lag: int = 6
) -> TraceStats:
    gaps = np.asarray(batch_gaps, dtype=float)
    sizes = np.asarray(batch_sizes, dtype=int)
    if gaps.size < max_lag + 2:
        msg = f"Need at least {max_lag + 2} batch gaps for lag {max_lag}, got {gaps.size}"
        raise TraceError(msg)
    if sizes.size == 0 or np.any(sizes < 1):
        msg = "Batch sizes must be positive counts"
        raise TraceError(msg)
    counts = np.bincount(sizes)[1:]
    pmf = counts / counts.sum()
    return TraceStats(
        n_batches=int(sizes.size),
        mean_interarrival=float(gaps.mean()),
        var_interarrival=float(gaps.var(ddof=1)),
        lag_corr=_autocorrelation(gaps, max_lag),
        batch_pmf=pmf,
        mean_batch=float(np.arange(1, pmf.size + 1) @ pmf),
    )


def read_timestamps(path: Union[str, Path]) -> np.ndarray:
    """One timestamp per line; blank lines and ``#`` comments are skipped."""
    values = []
    with open(path) as f:
        for number, line in enumerate(f, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            try:
                values.append(float(text))
            except ValueError as exc:
                msg = f"{path}:{number}: not a timestamp: {text!r}"
                raise TraceError(msg) from exc
    return np.array(values)


def ingest(
    timestamps: Sequence[float], cutoff: float, epsilon: float, max_lag: int = 6
) -> IngestReport:
    """interarrivals -> censor -> batchify -> empirical_stats."""
    durations = interarrivals(timestamps)
    kept, removed = censor(durations, cutoff)
    gaps, sizes = batchify(kept, epsilon)
    logger.info(
        "%d timestamps, %d long gaps censored, %d batches", len(timestamps), removed, sizes.size
    )
    return IngestReport(
        stats=empirical_stats(gaps, sizes, max_lag),
        n_timestamps=len(timestamps),
        n_censored=removed,
        n_pages=int(sizes.sum()),
    )


def bmap_template(stats: TraceStats) -> str:
    """Model-file fragment for a batch process with the empirical batch pmf.

    D0 and D1 are placeholders for a MAP fitted to the batch gaps elsewhere."""
    pmf = ", ".join(f"{d:.10g}" for d in stats.batch_pmf)
    return (
        "{\n"
        '  "kind": "scaled",\n'
        '  "process": {\n'
        '    "D0": [[-0.0, 0.0], [0.0, -0.0]],\n'
        '    "D1": [[0.0, 0.0], [0.0, 0.0]],\n'
        f'    "batch_pmf": [{pmf}]\n'
        "  },\n"
        '  "factors": [1, 2, 3, 4]\n'
        "}\n"
        f"# batch gaps: mean {stats.mean_interarrival:.6g}, variance {stats.var_interarrival:.6g}\n"
        f"# mean batch size {stats.mean_batch:.6g}\n"
    )
