"""Quantile forecasts from point forecasts plus empirical residual quantiles."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DataError

__all__ = ["QuantileForecast", "quantile_forecast", "residual_quantile"]

# Quantile levels used throughout for the right part of the demand distribution.
QUANTILE_LEVELS = (0.750, 0.835, 0.975, 0.995)


@dataclass(frozen=True)
class QuantileForecast:
    """H-step forecast of the demand quantile at level u."""

    u: float
    values: np.ndarray


def residual_quantile(residuals, u: float) -> float:
    """Empirical u-quantile of a residual sample (linear interpolation, type 7).

    Residuals follow the convention e_t = y_t - yhat_t, so a positive
    quantile shifts forecasts upward.
    """
    r = np.asarray(residuals, dtype=float)
    if r.size == 0:
        raise DataError("no residuals available")
    if not 0.0 < u < 1.0:
        raise ValueError(f"quantile level must be in (0, 1), got {u}")
    return float(np.quantile(r, u))


def quantile_forecast(point, residuals, u: float) -> QuantileForecast:
    """Shift each point forecast by the residual u-quantile, clamped at zero."""
    q = residual_quantile(residuals, u)
    values = np.maximum(np.asarray(point, dtype=float) + q, 0.0)
    return QuantileForecast(u=u, values=values)
