"""Synthetic demand generators for demos and end-to-end checks.

The three "separable clusters" are built so that exactly one pool method
reproduces each cluster's future windows with zero error, and the nine
demand features separate the clusters cleanly (the zero fraction alone
does it: 0.5 / 0.0 / 0.25).
"""

from __future__ import annotations

import numpy as np

from .core import Dataset, DemandSeries, Period

__all__ = [
    "alternating_series",
    "level_shift_series",
    "seasonal_series",
    "separable_clusters",
    "sparse_series",
]

# 12-period pattern with six zero periods; repeats exactly, so the seasonal
# naive method is the unique zero-error forecaster for these series
_SEASONAL_PATTERN = np.array([5.0, 0.0, 0.0, 1.0, 3.0, 0.0, 2.0, 0.0, 0.0, 4.0, 0.0, 1.0])


def seasonal_series(rng: np.random.Generator, sid: str, cycles: int = 7) -> DemandSeries:
    """Strictly periodic demand (period 12), per-series random amplitudes."""
    sizes = _SEASONAL_PATTERN * rng.uniform(0.5, 3.0)
    jitter = rng.uniform(0.8, 1.2, size=12)
    pattern = sizes * jitter
    return DemandSeries(sid, np.tile(pattern, cycles), Period.monthly())


def alternating_series(rng: np.random.Generator, sid: str, T: int = 84) -> DemandSeries:
    """Deterministic first-order autoregression with a negative coefficient.

    y_t = c + phi * y_{t-1} with phi = -0.95 oscillates around the mean
    without ever hitting zero; only the ARIMA member of the pool can
    reproduce it exactly (the decay keeps the 12-period seasonal naive
    clearly off target as well).
    """
    phi = -0.95
    mean = rng.uniform(8.0, 12.0)
    amp = rng.uniform(2.0, 6.0)
    c = mean * (1.0 - phi)
    y = np.empty(T)
    y[0] = mean + amp
    for t in range(1, T):
        y[t] = c + phi * y[t - 1]
    return DemandSeries(sid, y, Period.monthly())


def level_shift_series(rng: np.random.Generator, sid: str, T: int = 84,
                       horizon: int = 12) -> DemandSeries:
    """Noisy intermittent history that settles on a constant level for the
    last 2H+1 periods, making the naive method exact on both test windows."""
    head = T - 2 * horizon - 1
    values = rng.uniform(8.0, 16.0, size=head)
    # exactly 25% zeros over the first 2H periods' complement, never at t=0
    n_zero = head // 3
    zero_pos = rng.choice(np.arange(1, head), size=n_zero, replace=False)
    values[zero_pos] = 0.0
    level = rng.uniform(2.0, 5.0)
    return DemandSeries(sid, np.concatenate([values, np.full(2 * horizon + 1, level)]),
                        Period.monthly())


def separable_clusters(n_per_cluster: int = 100, horizon: int = 12,
                       seed: int = 0) -> Dataset:
    """Three feature-separable clusters, each owned by a distinct method."""
    rng = np.random.default_rng(seed)
    series = []
    for i in range(n_per_cluster):
        series.append(seasonal_series(rng, f"seasonal-{i:03d}"))
    for i in range(n_per_cluster):
        series.append(alternating_series(rng, f"alternating-{i:03d}"))
    for i in range(n_per_cluster):
        series.append(level_shift_series(rng, f"level-{i:03d}", horizon=horizon))
    return Dataset(tuple(series), name="separable-clusters")


def sparse_series(rng: np.random.Generator, sid: str, T: int = 60,
                  p_demand: float = 0.4, mean_size: float = 4.0,
                  period: Period | None = None) -> DemandSeries:
    """Generic intermittent demand: Bernoulli occurrence, geometric-ish sizes."""
    occur = rng.random(T) < p_demand
    occur[0] = True
    sizes = rng.poisson(mean_size, size=T) + 1.0
    return DemandSeries(sid, np.where(occur, sizes, 0.0), period or Period.monthly())
