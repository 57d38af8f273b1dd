"""Stationary moments of correlated trajectories.

Samples may carry time weights (dwell times of a jump process, or widths of
time bins). Standard errors come from batch means with batches several
integrated autocorrelation times long, so they account for correlation
between successive samples.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import EmptyWindow

MIN_BATCHES = 10
SOKAL_WINDOW = 5.0


@dataclass(frozen=True)
class TrajectoryStats:
    mean: float
    variance: float
    std_error: float
    """Standard error of ``mean``."""
    variance_std_error: float
    """Standard error of ``variance``."""
    decorrelation_time: float
    sample_count: int

    def to_dict(self) -> dict:
        return asdict(self)


def statistical_inefficiency(x: np.ndarray) -> float:
    """``1 + 2 sum_k rho(k)`` with Sokal's self-consistent window.

    Returns 1 for a constant sequence.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 2:
        return 1.0
    d = x - x.mean()
    c0 = float(np.dot(d, d)) / n
    if c0 <= 0.0:
        return 1.0
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(d, size)
    acov = np.fft.irfft(f * np.conj(f), size)[:n] / n
    rho = acov / acov[0]
    tau = 1.0 + 2.0 * np.cumsum(rho[1:])
    m = np.arange(1, n)
    ok = np.flatnonzero(m >= SOKAL_WINDOW * tau)
    g = tau[ok[0]] if ok.size else tau[-1]
    return float(max(g, 1.0))


def _batch_edges(n: int, batch_len: int):
    count = max(n // batch_len, 1)
    return np.linspace(0, n, count + 1).astype(int)


def estimate_stationary_moments(
    values, weights=None, second_moments=None, *, sample_interval: float = 1.0
) -> TrajectoryStats:
    """Time-weighted mean and variance with batch-means standard errors.

    Parameters
    ----------
    values : array_like
        Sample values in time order.
    weights : array_like, optional
        Time weight of each sample (dwell time or bin width). Defaults to a
        constant ``sample_interval``.
    second_moments : array_like, optional
        Per-sample mean of the squared value when each sample is itself the
        time average over a bin. Omitted means ``values**2``.
    sample_interval : float
        Time between samples; only used when ``weights`` is omitted.

    Returns
    -------
    TrajectoryStats
        ``decorrelation_time`` is the integrated autocorrelation time of the
        values, capped at 10% of the total window.
    """
    x = np.asarray(values, dtype=float)
    n = x.size
    if n == 0:
        raise EmptyWindow("no samples after burn-in")
    if weights is None:
        w = np.full(n, float(sample_interval))
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != x.shape:
            raise ValueError("weights and values differ in shape")
    total = w.sum()
    if not total > 0:
        raise EmptyWindow("total sample weight is zero")

    mean = float(np.dot(w, x) / total)
    dev = x - mean
    within = 0.0 if second_moments is None else np.asarray(second_moments, float) - x * x
    spread = dev * dev + within
    variance = max(float(np.dot(w, spread) / total), 0.0)

    if n < 2:
        return TrajectoryStats(mean, variance, math.nan, math.nan, 0.0, n)

    g_mean = statistical_inefficiency(x)
    g_var = statistical_inefficiency(spread)
    batch_len = max(math.ceil(math.sqrt(n)), math.ceil(10.0 * max(g_mean, g_var)))
    if n // batch_len < MIN_BATCHES:
        batch_len = max(n // MIN_BATCHES, 1)
    edges = _batch_edges(n, batch_len)
    wsum = np.add.reduceat(w, edges[:-1])
    batch_mean = np.add.reduceat(w * x, edges[:-1]) / wsum
    batch_var = np.add.reduceat(w * spread, edges[:-1]) / wsum
    b = batch_mean.size
    if b < 2:
        se_mean = se_var = math.nan
    else:
        se_mean = float(np.std(batch_mean, ddof=1) / math.sqrt(b))
        se_var = float(np.std(batch_var, ddof=1) / math.sqrt(b))

    step = total / n
    tau = float(min(0.5 * g_mean * step, 0.1 * total))
    return TrajectoryStats(mean, variance, se_mean, se_var, tau, n)


def pool_stats(parts) -> TrajectoryStats:
    """Merge independent runs by count-weighted pooling.

    The merge is associative and independent of order (up to rounding).
    """
    parts = list(parts)
    if not parts:
        raise EmptyWindow("nothing to pool")
    counts = np.array([p.sample_count for p in parts], dtype=float)
    total = counts.sum()
    means = np.array([p.mean for p in parts])
    mean = float(np.dot(counts, means) / total)
    second = np.array([p.variance for p in parts]) + (means - mean) ** 2
    variance = float(np.dot(counts, second) / total)
    frac = counts / total
    se = float(np.sqrt(np.sum((frac * [p.std_error for p in parts]) ** 2)))
    se_var = float(np.sqrt(np.sum((frac * [p.variance_std_error for p in parts]) ** 2)))
    tau = float(np.dot(frac, [p.decorrelation_time for p in parts]))
    return TrajectoryStats(mean, variance, se, se_var, tau, int(total))
