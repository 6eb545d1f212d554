"""The 12-method forecasting pool producing H-step-ahead point forecasts.

Every method returns a flat or trajectory forecast plus its in-sample
one-step errors (convention e_t = y_t - yhat_t), which feed the quantile
layer.  All parameter searches are deterministic: dense grids for the
smoothing recursions and least-squares (Hannan-Rissanen) estimation for
ARMA terms, so repeated runs are bit-identical at any parallelism level.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np

from .core import DemandSeries
from .features import idi

__all__ = [
    "ForecastMatrix",
    "MethodId",
    "forecast_aggregation_family",
    "forecast_all",
    "forecast_croston_family",
    "forecast_naive_family",
    "forecast_smoothing_family",
]

logger = logging.getLogger(__name__)

# Smoothing parameter search grid: 0.01, 0.02, ..., 0.99.
ALPHA_GRID = np.arange(1, 100) / 100.0

# Classical fixed smoothing parameter for Croston's method; the SBA
# correction factor 1 - alpha/2 = 0.95 follows from it.
CROSTON_ALPHA = 0.1


class MethodId(enum.IntEnum):
    """Stable pool ordering; every downstream matrix row follows it."""

    NAIVE = 0
    SNAIVE = 1
    SES = 2
    MA = 3
    ARIMA = 4
    ETS = 5
    CRO = 6
    OPT_CRO = 7
    SBA = 8
    TSB = 9
    ADIDA = 10
    IMAPA = 11

    @property
    def label(self) -> str:
        return _LABELS[self]


_LABELS = {
    MethodId.NAIVE: "Naive",
    MethodId.SNAIVE: "sNaive",
    MethodId.SES: "SES",
    MethodId.MA: "MA",
    MethodId.ARIMA: "ARIMA",
    MethodId.ETS: "ETS",
    MethodId.CRO: "CRO",
    MethodId.OPT_CRO: "optCro",
    MethodId.SBA: "SBA",
    MethodId.TSB: "TSB",
    MethodId.ADIDA: "ADIDA",
    MethodId.IMAPA: "IMAPA",
}

METHOD_LABELS = tuple(m.label for m in MethodId)


def method_from_label(label: str) -> MethodId:
    for m in MethodId:
        if m.label == label:
            return m
    raise ValueError(f"unknown method label {label!r}")


@dataclass(frozen=True)
class ForecastMatrix:
    """Per-series matrix of base-method forecasts (rows in MethodId order).

    Forecast values are clamped at zero; ``fit_residuals`` keeps the raw
    signed in-sample one-step errors per method.
    """

    series_id: str
    horizon: int
    methods: tuple[MethodId, ...]
    values: np.ndarray
    fit_residuals: tuple[np.ndarray, ...]

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (len(self.methods), self.horizon):
            raise ValueError("forecast matrix shape mismatch")
        if not np.all(np.isfinite(v)):
            raise ValueError("forecast matrix contains non-finite values")
        v = np.maximum(v, 0.0)
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def row(self, method: MethodId) -> np.ndarray:
        return self.values[self.methods.index(method)]

    def residuals(self, method: MethodId) -> np.ndarray:
        return self.fit_residuals[self.methods.index(method)]


# ---------------------------------------------------------------------------
# naive family

def _naive(y: np.ndarray, H: int):
    fc = np.full(H, y[-1])
    return fc, y[1:] - y[:-1]


def _snaive(y: np.ndarray, H: int, m: int):
    T = y.size
    if T < m:
        return _naive(y, H)
    h = np.arange(1, H + 1)
    fc = y[T - m + ((h - 1) % m)]
    if T >= m + 1:
        resid = y[m:] - y[:-m]
    else:
        resid = y[1:] - y[:-1]
    return fc, resid


# ---------------------------------------------------------------------------
# smoothing family

def _ses_grid(y: np.ndarray, alphas: np.ndarray):
    """Level recursion l_t = a*y_t + (1-a)*l_{t-1} for every candidate a.

    Returns (final levels, one-step errors) with shapes (A,), (A, T-1).
    """
    A = alphas.size
    level = np.full(A, y[0], dtype=float)
    errs = np.empty((A, y.size - 1), dtype=float)
    for t in range(1, y.size):
        errs[:, t - 1] = y[t] - level
        level = alphas * y[t] + (1.0 - alphas) * level
    return level, errs


def ses(y: np.ndarray, H: int, alpha: float | None = None):
    """Simple exponential smoothing; alpha optimized on one-step MSE unless given."""
    y = np.asarray(y, dtype=float)
    if y.size == 1:
        return np.full(H, y[0]), np.empty(0)
    grid = ALPHA_GRID if alpha is None else np.array([alpha], dtype=float)
    level, errs = _ses_grid(y, grid)
    best = int(np.argmin(np.mean(errs**2, axis=1)))
    return np.full(H, level[best]), errs[best]


def _ma(y: np.ndarray, H: int):
    """Moving average; window k chosen by in-sample one-step MSE (ties -> smallest k)."""
    T = y.size
    best_k, best_mse, best_resid = None, np.inf, None
    for k in range(2, min(24, T - 1) + 1):
        preds = np.convolve(y, np.ones(k) / k, mode="valid")[:-1]
        resid = y[k:] - preds
        mse = float(np.mean(resid**2))
        if mse < best_mse:
            best_k, best_mse, best_resid = k, mse, resid
    if best_k is None:  # T <= 2
        return _naive(y, H)
    return np.full(H, float(np.mean(y[-best_k:]))), best_resid


def _holt_grid(y, alphas, betas, phi):
    """Damped-trend recursion over an (alpha, beta) grid; phi=1 gives plain Holt."""
    T = y.size
    a, b = np.meshgrid(alphas, betas, indexing="ij")
    a, b = a.ravel(), b.ravel()
    level = np.full(a.size, y[0], dtype=float)
    trend = np.full(a.size, (y[-1] - y[0]) / (T - 1), dtype=float)
    sse = np.zeros(a.size)
    errs = np.empty((a.size, T), dtype=float)
    for t in range(T):
        pred = level + phi * trend
        e = y[t] - pred
        errs[:, t] = e
        new_level = a * y[t] + (1.0 - a) * pred
        trend = b * (new_level - level) + (1.0 - b) * phi * trend
        level = new_level
        sse += e**2
    return a, b, level, trend, sse, errs


def _aicc(sse: float, n: int, k: int) -> float:
    if n - k - 1 <= 0:
        return np.inf
    return n * np.log(max(sse, 1e-300) / n) + 2 * k + 2 * k * (k + 1) / (n - k - 1)


def _ets(y: np.ndarray, H: int):
    """Restricted additive exponential smoothing family selected by AICc.

    Candidates: simple (level only), Holt linear trend, and damped trend.
    Multiplicative forms are excluded because zero demands are routine.
    """
    T = y.size
    candidates = []  # (aicc, forecast, residuals)

    level, errs = _ses_grid(y, ALPHA_GRID)
    mse = np.mean(errs**2, axis=1)
    best = int(np.argmin(mse))
    sse = float(mse[best] * (T - 1))
    candidates.append((_aicc(sse, T, 2), np.full(H, level[best]), errs[best]))

    grid_ab = np.arange(1, 50) / 50.0  # 0.02 .. 0.98
    a, b, lv, tr, sse_v, errs_v = _holt_grid(y, grid_ab, grid_ab, 1.0)
    j = int(np.argmin(sse_v))
    fc = lv[j] + np.arange(1, H + 1) * tr[j]
    candidates.append((_aicc(float(sse_v[j]), T, 3), fc, errs_v[j]))

    grid_damp = np.arange(1, 25) / 25.0  # 0.04 .. 0.96
    for phi in (0.80, 0.85, 0.90, 0.95, 0.98):
        a, b, lv, tr, sse_v, errs_v = _holt_grid(y, grid_damp, grid_damp, phi)
        j = int(np.argmin(sse_v))
        damp = np.cumsum(phi ** np.arange(1, H + 1))
        fc = lv[j] + damp * tr[j]
        candidates.append((_aicc(float(sse_v[j]), T, 4), fc, errs_v[j]))

    candidates.sort(key=lambda c: c[0])
    _, fc, resid = candidates[0]
    return fc, resid


def _arma_roots_ok(coefs: np.ndarray, sign: float) -> bool:
    # characteristic polynomial 1 + sign*(c1 z + c2 z^2 + ...); all roots
    # must lie outside the unit circle
    if coefs.size == 0:
        return True
    poly = np.r_[sign * coefs[::-1], 1.0]
    roots = np.roots(poly)
    return roots.size == 0 or float(np.min(np.abs(roots))) > 1.001


def _css(w: np.ndarray, c: float, phi: np.ndarray, theta: np.ndarray):
    """Conditional-sum-of-squares innovations; eps fixed at 0 before index p."""
    n = w.size
    p, q = phi.size, theta.size
    eps = np.zeros(n)
    for t in range(p, n):
        v = w[t] - c
        for i in range(p):
            v -= phi[i] * w[t - 1 - i]
        for j in range(q):
            if t - 1 - j >= p:
                v -= theta[j] * eps[t - 1 - j]
        eps[t] = v
    return eps


def _hannan_rissanen(w: np.ndarray, p: int, q: int, const: bool):
    """Two-stage least-squares ARMA estimation on the (differenced) series."""
    n = w.size
    if q == 0:
        start = p
        cols = []
        if const:
            cols.append(np.ones(n - start))
        for i in range(1, p + 1):
            cols.append(w[start - i : n - i])
        if not cols:  # no parameters at all: pure noise model
            return 0.0, np.empty(0), np.empty(0)
        X = np.column_stack(cols)
        if X.shape[0] < X.shape[1] + 2:
            return None
        beta, *_ = np.linalg.lstsq(X, w[start:], rcond=None)
        c = beta[0] if const else 0.0
        phi = beta[1:] if const else beta
        return float(c), np.asarray(phi, dtype=float), np.empty(0)

    r = min(10, max(3, p + q + 1))
    start1 = r
    if n - start1 < r + 3:
        return None
    X1 = np.column_stack(
        [np.ones(n - start1)] + [w[start1 - i : n - i] for i in range(1, r + 1)]
    )
    beta1, *_ = np.linalg.lstsq(X1, w[start1:], rcond=None)
    eps = np.zeros(n)
    eps[start1:] = w[start1:] - X1 @ beta1

    start = max(p, r + q)
    rows = n - start
    k = p + q + (1 if const else 0)
    if rows < k + 2:
        return None
    cols = []
    if const:
        cols.append(np.ones(rows))
    for i in range(1, p + 1):
        cols.append(w[start - i : n - i])
    for j in range(1, q + 1):
        cols.append(eps[start - j : n - j])
    X = np.column_stack(cols)
    beta, *_ = np.linalg.lstsq(X, w[start:], rcond=None)
    ofs = 1 if const else 0
    c = float(beta[0]) if const else 0.0
    phi = np.asarray(beta[ofs : ofs + p], dtype=float)
    theta = np.asarray(beta[ofs + p :], dtype=float)
    return c, phi, theta


def _arima(y: np.ndarray, H: int):
    """Restricted ARIMA grid (p,q in 0..2, d in 0..1, optional constant) by AICc."""
    T = y.size
    best = None  # (aicc, d, c, phi, theta, eps, w)
    for d in (0, 1):
        w = np.diff(y, n=d) if d else y.copy()
        n = w.size
        if n < 3:
            continue
        for p in (0, 1, 2):
            for q in (0, 1, 2):
                for const in (False, True):
                    if p == 0 and q == 0 and not const:
                        continue  # identically-zero model carries no information
                    est = _hannan_rissanen(w, p, q, const)
                    if est is None:
                        continue
                    c, phi, theta = est
                    if not (_arma_roots_ok(phi, -1.0) and _arma_roots_ok(theta, 1.0)):
                        continue
                    eps = _css(w, c, phi, theta)
                    n_eff = n - p
                    k = p + q + (1 if const else 0) + 1
                    sse = float(np.sum(eps[p:] ** 2))
                    aicc = _aicc(sse, n_eff, k)
                    if best is None or aicc < best[0]:
                        best = (aicc, d, c, phi, theta, eps, w)
    if best is None:
        mean = float(np.mean(y))
        return np.full(H, mean), y - mean

    _, d, c, phi, theta, eps, w = best
    n = w.size
    p, q = phi.size, theta.size
    wext = np.concatenate([w, np.zeros(H)])
    for step in range(H):
        t = n + step
        v = c
        for i in range(p):
            v += phi[i] * wext[t - 1 - i]
        for j in range(q):
            idx = t - 1 - j
            if p <= idx < n:
                v += theta[j] * eps[idx]
        wext[t] = v
    wf = wext[n:]
    fc = y[-1] + np.cumsum(wf) if d == 1 else wf
    return fc, eps[p:]


# ---------------------------------------------------------------------------
# croston family

def _croston_grid(y: np.ndarray, size_grid: np.ndarray, int_grid: np.ndarray):
    """Croston recursion over smoothing grids for sizes and intervals.

    Returns final smoothed sizes Z (A,), intervals P (B,), the in-sample
    one-step MSE surface (A, B), and per-demand state paths for residual
    reconstruction.
    """
    pos = np.flatnonzero(y > 0)
    sizes = y[pos]
    K = pos.size
    A, B = size_grid.size, int_grid.size
    Z = np.empty((A, K))
    P = np.empty((B, K))
    Z[:, 0] = sizes[0]
    P[:, 0] = pos[0] + 1  # 1-based position of the first demand
    for j in range(1, K):
        Z[:, j] = size_grid * sizes[j] + (1.0 - size_grid) * Z[:, j - 1]
        P[:, j] = int_grid * (pos[j] - pos[j - 1]) + (1.0 - int_grid) * P[:, j - 1]

    # group periods t by the index of the last demand strictly before t
    T = y.size
    bounds = np.concatenate([pos + 1, [T]])  # group j covers [pos[j]+1, bounds[j+1])
    n_g = np.maximum(bounds[1:] - bounds[:-1], 0).astype(float)
    s1 = np.array([np.sum(y[bounds[j] : bounds[j + 1]]) for j in range(K)])
    s2 = np.array([np.sum(y[bounds[j] : bounds[j + 1]] ** 2) for j in range(K)])
    R = Z[:, None, :] / P[None, :, :]
    mse = (R**2 @ n_g - 2.0 * (R @ s1) + np.sum(s2)) / max(T - 1, 1)
    return Z, P, mse, pos


def _croston_rate_path(y, alpha_size, alpha_int):
    """In-sample demand-rate one-step forecasts f_t, t = 1..T-1 (0-based)."""
    pos = np.flatnonzero(y > 0)
    sizes = y[pos]
    z, p = sizes[0], float(pos[0] + 1)
    rates = np.empty(pos.size)
    rates[0] = z / p
    for j in range(1, pos.size):
        z = alpha_size * sizes[j] + (1.0 - alpha_size) * z
        p = alpha_int * (pos[j] - pos[j - 1]) + (1.0 - alpha_int) * p
        rates[j] = z / p
    f = np.empty(y.size)
    f[: pos[0] + 1] = rates[0]
    for j in range(pos.size):
        hi = pos[j + 1] + 1 if j + 1 < pos.size else y.size
        f[pos[j] + 1 : hi] = rates[j]
    return f[1:]  # prediction for periods 2..T


def _croston_variants(y: np.ndarray, H: int):
    """CRO (fixed alpha), SBA (bias-corrected), and grid-optimized Croston."""
    pos = np.flatnonzero(y > 0)
    T = y.size
    if pos.size == 1:
        # intervals undefined: fall back to the plain demand-rate estimate
        rate = float(y[pos[0]] / T)
        resid = y[1:] - rate
        flat = np.full(H, rate)
        return (flat, resid), (0.95 * flat, y[1:] - 0.95 * rate), (flat, resid)

    fixed = np.array([CROSTON_ALPHA])
    Z, P, _, _ = _croston_grid(y, fixed, fixed)
    cro_rate = float(Z[0, -1] / P[0, -1])
    path = _croston_rate_path(y, CROSTON_ALPHA, CROSTON_ALPHA)
    cro = (np.full(H, cro_rate), y[1:] - path)
    sba = (np.full(H, 0.95 * cro_rate), y[1:] - 0.95 * path)

    _, _, mse, _ = _croston_grid(y, ALPHA_GRID, ALPHA_GRID)
    ai, bi = np.unravel_index(int(np.argmin(mse)), mse.shape)
    a_s, a_i = float(ALPHA_GRID[ai]), float(ALPHA_GRID[bi])
    Zo, Po, _, _ = _croston_grid(y, np.array([a_s]), np.array([a_i]))
    opt_path = _croston_rate_path(y, a_s, a_i)
    opt = (np.full(H, float(Zo[0, -1] / Po[0, -1])), y[1:] - opt_path)
    return cro, sba, opt


def _tsb(y: np.ndarray, H: int):
    """Teunter-Syntetos-Babai: smooth occurrence probability and demand size."""
    T = y.size
    occ = (y > 0).astype(float)
    if T == 1:
        return np.full(H, y[0]), np.empty(0)
    A = B = ALPHA_GRID.size
    Zg = np.full(A, y[0], dtype=float)
    Dg = np.full(B, occ[0], dtype=float)
    preds = np.empty((A, B, T - 1))
    for t in range(1, T):
        preds[:, :, t - 1] = Zg[:, None] * Dg[None, :]
        Dg = ALPHA_GRID * occ[t] + (1.0 - ALPHA_GRID) * Dg
        if occ[t]:
            Zg = ALPHA_GRID * y[t] + (1.0 - ALPHA_GRID) * Zg
    mse = np.mean((y[1:][None, None, :] - preds) ** 2, axis=2)
    ai, bi = np.unravel_index(int(np.argmin(mse)), mse.shape)
    # replay the winning pair for the final state
    z, d = y[0], occ[0]
    for t in range(1, T):
        d = ALPHA_GRID[bi] * occ[t] + (1.0 - ALPHA_GRID[bi]) * d
        if occ[t]:
            z = ALPHA_GRID[ai] * y[t] + (1.0 - ALPHA_GRID[ai]) * z
    return np.full(H, float(d * z)), y[1:] - preds[ai, bi]


# ---------------------------------------------------------------------------
# temporal aggregation family

def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def _adida_level(y: np.ndarray, H: int, a: int):
    """Forecast at one aggregation level: bucket, smooth, disaggregate.

    Buckets of length ``a`` are anchored at the series end; an incomplete
    head bucket is dropped.  Returns the flat per-period forecast and the
    in-sample one-step predictions (NaN where undefined).
    """
    T = y.size
    preds = np.full(T, np.nan)
    if a >= T:
        level = float(np.sum(y))
        return np.full(H, level / a), preds
    n_buckets = T // a
    start = T - n_buckets * a
    buckets = y[start:].reshape(n_buckets, a).sum(axis=1)
    if n_buckets == 1:
        level = float(buckets[0])
    else:
        levels, errs = _ses_grid(buckets, ALPHA_GRID)
        best = int(np.argmin(np.mean(errs**2, axis=1)))
        level = float(levels[best])
        # one-step bucket predictions disaggregated to the base frequency
        lev_path = buckets[0]
        alpha = ALPHA_GRID[best]
        for b in range(1, n_buckets):
            lo = start + b * a
            preds[lo : lo + a] = lev_path / a
            lev_path = alpha * buckets[b] + (1.0 - alpha) * lev_path
    return np.full(H, level / a), preds


def _adida(y: np.ndarray, H: int):
    a = max(1, _round_half_up(idi(y)))
    fc, preds = _adida_level(y, H, a)
    mask = ~np.isnan(preds)
    return fc, (y[mask] - preds[mask]) if mask.any() else np.empty(0)


def _imapa(y: np.ndarray, H: int):
    """Average the per-level aggregate forecasts over levels 1..round(mean IDI)."""
    a_max = max(1, _round_half_up(idi(y)))
    fcs, pred_stack = [], []
    for a in range(1, a_max + 1):
        fc, preds = _adida_level(y, H, a)
        fcs.append(fc)
        pred_stack.append(preds)
    fc = np.mean(np.vstack(fcs), axis=0)
    stack = np.vstack(pred_stack)
    counts = np.sum(~np.isnan(stack), axis=0)
    mask = counts > 0
    if not mask.any():
        return fc, np.empty(0)
    preds = np.nansum(stack, axis=0)[mask] / counts[mask]
    return fc, y[mask] - preds


# ---------------------------------------------------------------------------
# family operations

def forecast_naive_family(s: DemandSeries, H: int) -> dict[MethodId, np.ndarray]:
    y = s.values
    return {
        MethodId.NAIVE: _naive(y, H)[0],
        MethodId.SNAIVE: _snaive(y, H, s.period.m)[0],
    }


def forecast_smoothing_family(s: DemandSeries, H: int) -> dict[MethodId, np.ndarray]:
    rows = {m: fc for m, (fc, _) in _smoothing_with_residuals(s.values, H).items()}
    return rows


def _smoothing_with_residuals(y: np.ndarray, H: int):
    T = y.size
    if T < 3 or np.ptp(y) == 0.0:
        flat = np.full(H, float(np.mean(y)))
        resid = y - float(np.mean(y))
        return {m: (flat.copy(), resid.copy()) for m in
                (MethodId.SES, MethodId.MA, MethodId.ETS, MethodId.ARIMA)}
    return {
        MethodId.SES: ses(y, H),
        MethodId.MA: _ma(y, H),
        MethodId.ETS: _ets(y, H),
        MethodId.ARIMA: _arima(y, H),
    }


def forecast_croston_family(s: DemandSeries, H: int) -> dict[MethodId, np.ndarray]:
    cro, sba, opt = _croston_variants(s.values, H)
    return {
        MethodId.CRO: cro[0],
        MethodId.OPT_CRO: opt[0],
        MethodId.SBA: sba[0],
        MethodId.TSB: _tsb(s.values, H)[0],
    }


def forecast_aggregation_family(s: DemandSeries, H: int) -> dict[MethodId, np.ndarray]:
    return {
        MethodId.ADIDA: _adida(s.values, H)[0],
        MethodId.IMAPA: _imapa(s.values, H)[0],
    }


def _all_with_residuals(y: np.ndarray, m: int, H: int):
    out: dict[MethodId, tuple[np.ndarray, np.ndarray]] = {}
    out[MethodId.NAIVE] = _naive(y, H)
    out[MethodId.SNAIVE] = _snaive(y, H, m)
    out.update(_smoothing_with_residuals(y, H))
    cro, sba, opt = _croston_variants(y, H)
    out[MethodId.CRO] = cro
    out[MethodId.OPT_CRO] = opt
    out[MethodId.SBA] = sba
    out[MethodId.TSB] = _tsb(y, H)
    out[MethodId.ADIDA] = _adida(y, H)
    out[MethodId.IMAPA] = _imapa(y, H)
    return out


_FAMILY_MEMBERS = {
    "naive": (MethodId.NAIVE, MethodId.SNAIVE),
    "smoothing": (MethodId.SES, MethodId.MA, MethodId.ETS, MethodId.ARIMA),
    "croston": (MethodId.CRO, MethodId.OPT_CRO, MethodId.SBA, MethodId.TSB),
    "aggregation": (MethodId.ADIDA, MethodId.IMAPA),
}


def forecast_all(s: DemandSeries, H: int, methods=None) -> ForecastMatrix:
    """Run the pool and assemble the forecast matrix in MethodId order.

    A method failure never fails the series: the offending rows fall back
    to the flat overall-mean forecast and the substitution is logged.
    ``methods`` restricts the pool (used after pooling selection).
    """
    if H < 1:
        raise ValueError(f"horizon must be positive, got {H}")
    wanted = tuple(sorted(methods)) if methods is not None else tuple(MethodId)
    y = s.values
    mean = float(np.mean(y))
    fallback = (np.full(H, mean), y - mean)

    results: dict[MethodId, tuple[np.ndarray, np.ndarray]] = {}
    family_runners = {
        "naive": lambda: {MethodId.NAIVE: _naive(y, H), MethodId.SNAIVE: _snaive(y, H, s.period.m)},
        "smoothing": lambda: _smoothing_with_residuals(y, H),
        "croston": lambda: dict(zip(
            (MethodId.CRO, MethodId.SBA, MethodId.OPT_CRO),
            _croston_variants(y, H))) | {MethodId.TSB: _tsb(y, H)},
        "aggregation": lambda: {MethodId.ADIDA: _adida(y, H), MethodId.IMAPA: _imapa(y, H)},
    }
    for family, members in _FAMILY_MEMBERS.items():
        if not any(m in wanted for m in members):
            continue
        try:
            results.update(family_runners[family]())
        except Exception as exc:  # pragma: no cover - defensive fallback
            logger.warning("series %s: %s family failed (%s); flat-mean fallback",
                           s.id, family, exc)
            for m in members:
                results[m] = fallback

    values = np.vstack([results[m][0] for m in wanted])
    resid = tuple(np.asarray(results[m][1], dtype=float) for m in wanted)
    return ForecastMatrix(series_id=s.id, horizon=H, methods=wanted,
                          values=values, fit_residuals=resid)
