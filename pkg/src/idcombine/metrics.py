"""Scaled point and quantile loss functions, and cross-series rank summaries."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .core import DataError

__all__ = ["ErrorMatrix", "average_rank", "rmsse", "spl"]


@dataclass(frozen=True)
class ErrorMatrix:
    """Per-series, per-method scalar losses (one loss kind)."""

    loss_kind: str
    series_ids: tuple[str, ...]
    method_ids: tuple[str, ...]
    values: np.ndarray  # N x M, non-negative

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (len(self.series_ids), len(self.method_ids)):
            raise ValueError("error matrix shape does not match labels")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise ValueError("error matrix must be finite and non-negative")
        object.__setattr__(self, "values", v)


def rmsse(history, forecast, actual) -> float:
    """Root mean squared error scaled by the history's mean squared first difference."""
    y = np.asarray(history, dtype=float)
    f = np.asarray(forecast, dtype=float)
    a = np.asarray(actual, dtype=float)
    if y.size < 2:
        raise DataError("undefined scale: history shorter than 2")
    denom = float(np.mean(np.diff(y) ** 2))
    if denom == 0.0:
        raise DataError("undefined scale: constant history")
    num = float(np.mean((a - f) ** 2))
    return float(np.sqrt(num / denom))


def spl(history, qforecast, actual, u: float) -> float:
    """Pinball loss at level u averaged over the horizon, scaled by the
    history's mean absolute first difference.

    Ties (Q == y) fall on the under-forecast branch, which contributes 0.
    """
    y = np.asarray(history, dtype=float)
    q = np.asarray(qforecast, dtype=float)
    a = np.asarray(actual, dtype=float)
    if y.size < 2:
        raise DataError("undefined scale: history shorter than 2")
    denom = float(np.mean(np.abs(np.diff(y))))
    if denom == 0.0:
        raise DataError("undefined scale: constant history")
    under = q <= a
    loss = np.where(under, u * (a - q), (1.0 - u) * (q - a))
    return float(np.mean(loss) / denom)


def pinball(qforecast, actual, u: float) -> float:
    """Unscaled mean pinball loss; building block for spl and its tests."""
    q = np.asarray(qforecast, dtype=float)
    a = np.asarray(actual, dtype=float)
    return float(np.mean(np.where(q <= a, u * (a - q), (1.0 - u) * (q - a))))


def average_rank(em: ErrorMatrix) -> np.ndarray:
    """Mean rank of each method across series (rank 1 = lowest loss; ties average)."""
    if em.values.shape[0] == 0:
        raise ValueError("empty error matrix")
    ranks = np.apply_along_axis(lambda r: rankdata(r, method="average"), 1, em.values)
    return ranks.mean(axis=0)
