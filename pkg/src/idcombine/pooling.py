"""Pool-shrinking algorithms applied before meta-training.

Three ways to cut the 12-method pool down: Islands (outlier detection on
the gaps between sorted per-method criteria), Screened (greedy drop of
methods whose errors correlate above 0.95 with a better-ranked method),
and Lasso (L1-penalized regression of actuals on stacked forecasts, keep
the nonzero coefficients).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .forecasters import MethodId

__all__ = ["PoolSelection", "pool_islands", "pool_lasso", "pool_screened"]

CORRELATION_CUTOFF = 0.95
LASSO_PATH_LEN = 50
LASSO_PATH_DECADES = 1e-4
LASSO_TOL = 1e-8
LASSO_MAX_SWEEPS = 1000
CV_FOLDS = 5


@dataclass(frozen=True)
class PoolSelection:
    kept: tuple[MethodId, ...]
    algorithm: str
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.kept:
            raise ValueError("pool selection must keep at least one method")
        object.__setattr__(self, "kept", tuple(sorted(self.kept)))


def _methods(criterion, methods):
    if methods is None:
        methods = tuple(MethodId)[: len(criterion)]
    return tuple(methods)


def pool_islands(criterion, methods=None, gap_mode: str = "gaps") -> PoolSelection:
    """Keep methods up to the first outlying jump in sorted criterion values.

    Sort the per-method criterion ascending, form the successive gaps
    C' = (0, C(2)-C(1), ...), and flag gaps at or above Q3 + 1.5 IQR of C'
    (``gap_mode="cumulative"`` applies the rule to C(j) - C(1) instead).
    Everything before the first flagged position survives; if nothing is
    flagged the whole pool survives.
    """
    c = np.asarray(criterion, dtype=float)
    methods = _methods(c, methods)
    order = np.argsort(c, kind="stable")
    sorted_c = c[order]
    gaps = np.concatenate([[0.0], np.diff(sorted_c)])
    stat = np.cumsum(gaps) if gap_mode == "cumulative" else gaps
    if gap_mode not in ("gaps", "cumulative"):
        raise ValueError(f"unknown islands gap mode {gap_mode!r}")
    q3 = float(np.quantile(stat, 0.75))
    iqr = q3 - float(np.quantile(stat, 0.25))
    threshold = q3 + 1.5 * iqr
    # a zero jump is never outlying: exact criterion ties must not cut the
    # pool even when the threshold degenerates to 0
    breach = np.flatnonzero((stat >= threshold) & (stat > 0.0))
    cut = int(breach[0]) if breach.size else len(methods)
    kept = tuple(methods[i] for i in order[:cut])
    return PoolSelection(
        kept=kept,
        algorithm="islands",
        diagnostics={
            "criterion": {methods[i].label: float(c[i]) for i in range(len(methods))},
            "gap_mode": gap_mode,
            "threshold": threshold,
            "stat": [float(v) for v in stat],
        },
    )


def pool_screened(inner_errors, criterion, methods=None) -> PoolSelection:
    """Greedy accept in criterion order; reject methods whose error sequence
    correlates above the cutoff with any accepted method.

    Zero-variance error sequences count as correlation 1 against everything,
    so only the first accepted method may have one.
    """
    E = np.asarray(inner_errors, dtype=float)
    c = np.asarray(criterion, dtype=float)
    methods = _methods(c, methods)
    order = np.argsort(c, kind="stable")
    accepted: list[int] = []
    dropped: dict[str, str] = {}
    sd = E.std(axis=1)
    for i in order:
        ok = True
        for j in accepted:
            if sd[i] == 0.0 or sd[j] == 0.0:
                corr = 1.0
            else:
                corr = float(np.corrcoef(E[i], E[j])[0, 1])
            if corr > CORRELATION_CUTOFF:
                ok = False
                dropped[methods[i].label] = (
                    f"error correlation {corr:.4f} with {methods[j].label}"
                )
                break
        if ok:
            accepted.append(int(i))
    kept = tuple(methods[i] for i in accepted)
    return PoolSelection(
        kept=kept,
        algorithm="screened",
        diagnostics={"dropped": dropped,
                     "criterion": {methods[i].label: float(c[i]) for i in range(len(methods))}},
    )


# ---------------------------------------------------------------------------
# lasso

def _soft_threshold(z: float, t: float) -> float:
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


def _lasso_objective(X, y, beta, lam):
    r = y - X @ beta
    return 0.5 * float(r @ r) / y.size + lam * float(np.sum(np.abs(beta)))


def _coordinate_descent(X, y, lam, beta0, col_sq):
    """Cyclic coordinate descent with soft thresholding; the objective is
    non-increasing per sweep (asserted)."""
    n = y.size
    beta = beta0.copy()
    r = y - X @ beta
    obj = _lasso_objective(X, y, beta, lam)
    for _ in range(LASSO_MAX_SWEEPS):
        max_delta = 0.0
        for j in range(X.shape[1]):
            if col_sq[j] == 0.0:
                continue
            old = beta[j]
            rho = (X[:, j] @ r) / n + col_sq[j] * old / n
            new = _soft_threshold(rho, lam) / (col_sq[j] / n)
            if new != old:
                beta[j] = new
                r -= X[:, j] * (new - old)
                max_delta = max(max_delta, abs(new - old))
        new_obj = _lasso_objective(X, y, beta, lam)
        assert new_obj <= obj + 1e-10, "coordinate descent objective increased"
        obj = new_obj
        if max_delta < LASSO_TOL:
            break
    return beta


def _lasso_path(X, y, lambdas, col_sq):
    betas = np.zeros((lambdas.size, X.shape[1]))
    beta = np.zeros(X.shape[1])
    for i, lam in enumerate(lambdas):
        beta = _coordinate_descent(X, y, lam, beta, col_sq)
        betas[i] = beta
    return betas


def pool_lasso(inner_forecasts, actuals, criterion=None, methods=None,
               seed: int = 0) -> PoolSelection:
    """L1 selection: regress stacked inner-window actuals on per-method
    forecasts without an intercept; methods with nonzero coefficients at
    the cross-validated lambda survive.

    Predictor columns are centered and scaled when their variance is
    positive; the response is never standardized (it is frequently all
    zero for intermittent demand).  With fewer than 5 rows the lambda is
    chosen on the training error with a one-standard-error rule instead
    of cross-validation.  If everything is zeroed out, the single best
    method by criterion survives.
    """
    X_raw = np.asarray(inner_forecasts, dtype=float)
    y = np.asarray(actuals, dtype=float)
    if X_raw.ndim != 2 or X_raw.shape[0] != y.size:
        raise ValueError("design matrix rows must match actuals")
    M = X_raw.shape[1]
    if methods is None:
        methods = tuple(MethodId)[:M]
    methods = tuple(methods)
    n = y.size

    mu = X_raw.mean(axis=0)
    sd = X_raw.std(axis=0)
    X = np.where(sd > 0, (X_raw - mu) / np.where(sd > 0, sd, 1.0), X_raw)
    col_sq = np.einsum("ij,ij->j", X, X)

    lam_max = float(np.max(np.abs(X.T @ y))) / n
    if lam_max <= 0.0:
        best = 0 if criterion is None else int(np.argmin(criterion))
        return PoolSelection(kept=(methods[best],), algorithm="lasso",
                             diagnostics={"note": "degenerate design; best method kept"})
    lambdas = np.geomspace(lam_max, lam_max * LASSO_PATH_DECADES, LASSO_PATH_LEN)

    if n >= CV_FOLDS:
        rng = np.random.default_rng(seed)
        folds = rng.permutation(n) % CV_FOLDS
        cv_mse = np.zeros(lambdas.size)
        for f in range(CV_FOLDS):
            tr, te = folds != f, folds == f
            c_sq = np.einsum("ij,ij->j", X[tr], X[tr])
            betas = _lasso_path(X[tr], y[tr], lambdas, c_sq)
            resid = y[te][None, :] - betas @ X[te].T
            cv_mse += np.mean(resid**2, axis=1)
        pick = int(np.argmin(cv_mse / CV_FOLDS))
    else:
        betas_all = _lasso_path(X, y, lambdas, col_sq)
        resid = y[None, :] - betas_all @ X.T
        sq = resid**2
        mse = sq.mean(axis=1)
        best_i = int(np.argmin(mse))
        se = float(sq[best_i].std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
        within = np.flatnonzero(mse <= mse[best_i] + se)
        pick = int(within[0])  # largest lambda within one SE (path is descending)

    beta = _lasso_path(X, y, lambdas, col_sq)[pick]
    nz = np.flatnonzero(beta != 0.0)
    if nz.size == 0:
        best = 0 if criterion is None else int(np.argmin(criterion))
        nz = np.array([best])
    kept = tuple(methods[int(i)] for i in nz)
    return PoolSelection(
        kept=kept,
        algorithm="lasso",
        diagnostics={
            "lambda": float(lambdas[pick]),
            "coefficients": {methods[j].label: float(beta[j]) for j in range(M)},
        },
    )
