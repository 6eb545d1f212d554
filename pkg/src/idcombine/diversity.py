"""Pairwise scaled diversity of base forecasts."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["DiversityVector", "diversity_vector", "pair_diversity", "pair_labels", "pair_order"]


@dataclass(frozen=True)
class DiversityVector:
    """All pairwise diversities for one series, in canonical (i < j) order."""

    series_id: str
    values: np.ndarray


def pair_order(n_methods: int) -> list[tuple[int, int]]:
    """Canonical unordered-pair order: (0,1), (0,2), ..., (n-2, n-1)."""
    return [(i, j) for i in range(n_methods) for j in range(i + 1, n_methods)]


def pair_labels(n_methods: int) -> list[str]:
    return [f"d_{i}_{j}" for i, j in pair_order(n_methods)]


def pair_diversity(fi, fj, history) -> float:
    """Mean squared disagreement of two forecasts over the horizon, scaled by
    the squared mean absolute level of the observed history."""
    fi = np.asarray(fi, dtype=float)
    fj = np.asarray(fj, dtype=float)
    y = np.asarray(history, dtype=float)
    scale = float(np.mean(np.abs(y)))
    if scale <= 0.0:
        raise ValueError("history mean |y| must be positive")
    return float(np.mean((fi - fj) ** 2) / scale**2)


def diversity_vector(forecasts: np.ndarray, history, series_id: str = "") -> DiversityVector:
    """Diversity of every method pair; M methods give M*(M-1)/2 values.

    ``forecasts`` is the M x H matrix of base forecasts whose pairwise
    disagreement is measured.
    """
    fm = np.asarray(forecasts, dtype=float)
    y = np.asarray(history, dtype=float)
    scale = float(np.mean(np.abs(y)))
    if scale <= 0.0:
        raise ValueError("history mean |y| must be positive")
    m = fm.shape[0]
    idx = pair_order(m)
    diffs = np.array([np.mean((fm[i] - fm[j]) ** 2) for i, j in idx])
    return DiversityVector(series_id=series_id, values=diffs / scale**2)
