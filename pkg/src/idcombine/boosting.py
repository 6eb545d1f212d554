"""Gradient-boosted regression trees with a softmax weighted-error objective.

One boosting round fits M depth-limited trees (one per pool method) to the
gradient/curvature of the objective at the current raw scores.  Softmax of
the accumulated scores gives the combination weights, so minimizing

    sum_n sum_i softmax(s_n)_i * err_{n,i}

drives weight onto the methods with the lowest per-series error.  Splits
are exact greedy (no histograms): every distinct feature value is a
candidate threshold, evaluated by the usual second-order gain.  All tie
breaks are fixed (lowest feature index, then lowest threshold), making
training deterministic for a given seed at any parallelism level.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

__all__ = [
    "BoostParams",
    "BoostResult",
    "fit_boosted",
    "predict_raw",
    "softmax",
    "tree_predict",
    "weighted_error_grad_hess",
    "best_class_grad_hess",
]

EPS_HESSIAN = 1e-6
MIN_SPLIT_GAIN = 1e-12  # suppresses float-noise splits on flat gradients


@dataclass(frozen=True)
class BoostParams:
    n_rounds: int = 200
    learning_rate: float = 0.1
    max_depth: int = 3
    min_child_weight: float = 1.0
    subsample: float = 1.0
    colsample: float = 1.0
    reg_lambda: float = 1.0
    gamma: float = 0.0
    seed: int = 0
    early_stopping_rounds: int = 10
    early_stopping_tol: float = 1e-7
    holdout_fraction: float = 0.1

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "BoostParams":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown hyperparameters: {sorted(unknown)}")
        return cls(**d)


def softmax(scores: np.ndarray) -> np.ndarray:
    """Row-wise softmax, shifted for overflow safety."""
    s = np.asarray(scores, dtype=float)
    z = s - s.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def weighted_error_grad_hess(scores: np.ndarray, err: np.ndarray):
    """Gradient and diagonal curvature of the softmax weighted-error loss.

    L_n = sum_i w_{n,i} err_{n,i} with w_n = softmax(s_n);
    g_{n,i} = w_{n,i} (err_{n,i} - L_n);
    h_{n,i} = max(eps, w_{n,i} (1 - w_{n,i}) err_{n,i})  (positive surrogate).
    """
    w = softmax(scores)
    loss = np.sum(w * err, axis=1)
    g = w * (err - loss[:, None])
    h = np.maximum(EPS_HESSIAN, w * (1.0 - w) * err)
    return g, h, loss


def best_class_grad_hess(scores: np.ndarray, err: np.ndarray):
    """Softmax cross-entropy against the argmin-error method as target class."""
    targets = np.argmin(err, axis=1)
    p = softmax(scores)
    onehot = np.zeros_like(p)
    onehot[np.arange(p.shape[0]), targets] = 1.0
    g = p - onehot
    h = np.maximum(EPS_HESSIAN, p * (1.0 - p))
    loss = -np.log(np.maximum(p[np.arange(p.shape[0]), targets], 1e-300))
    return g, h, loss


# ---------------------------------------------------------------------------
# single tree

def _fit_tree(X, g, h, rows, features, sort_idx, params: BoostParams, gain_sink):
    """Exact greedy regression tree on (g, h); returns the nested node dict.

    Leaf values already include the learning-rate shrinkage, so ensemble
    prediction is a plain sum over trees.
    """
    lam = params.reg_lambda

    def leaf_value(idx):
        G, H = g[idx].sum(), h[idx].sum()
        return {"leaf": float(-G / (H + lam) * params.learning_rate)}

    def best_split(idx):
        G, H = g[idx].sum(), h[idx].sum()
        parent = G * G / (H + lam)
        member = np.zeros(X.shape[0], dtype=bool)
        member[idx] = True
        best = None  # (gain, feature, threshold, left_idx, right_idx)
        for f in features:
            order = sort_idx[:, f][member[sort_idx[:, f]]]
            xs = X[order, f]
            if xs[0] == xs[-1]:
                continue
            cg = np.cumsum(g[order])
            ch = np.cumsum(h[order])
            cut = np.flatnonzero(xs[:-1] < xs[1:])  # split after position i
            if cut.size == 0:
                continue
            GL, HL = cg[cut], ch[cut]
            GR, HR = G - GL, H - HL
            ok = (HL >= params.min_child_weight) & (HR >= params.min_child_weight)
            if not ok.any():
                continue
            gain = 0.5 * (GL**2 / (HL + lam) + GR**2 / (HR + lam) - parent)
            gain[~ok] = -np.inf
            j = int(np.argmax(gain))
            if gain[j] <= max(params.gamma, MIN_SPLIT_GAIN):
                continue
            if best is None or gain[j] > best[0]:
                thr = 0.5 * (xs[cut[j]] + xs[cut[j] + 1])
                best = (float(gain[j]), f, float(thr), order[: cut[j] + 1], order[cut[j] + 1:])
        return best

    def build(idx, depth):
        if depth >= params.max_depth or idx.size < 2:
            return leaf_value(idx)
        found = best_split(idx)
        if found is None:
            return leaf_value(idx)
        gain, f, thr, left, right = found
        gain_sink[f] += gain
        return {
            "feature": int(f),
            "threshold": thr,
            "left": build(left, depth + 1),
            "right": build(right, depth + 1),
        }

    return build(rows, 0)


def tree_predict(node: dict, X: np.ndarray) -> np.ndarray:
    """Evaluate one tree on a feature matrix (rows go left when x <= threshold)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    out = np.empty(X.shape[0])
    stack = [(node, np.arange(X.shape[0]))]
    while stack:
        nd, idx = stack.pop()
        if "leaf" in nd:
            out[idx] = nd["leaf"]
            continue
        mask = X[idx, nd["feature"]] <= nd["threshold"]
        stack.append((nd["left"], idx[mask]))
        stack.append((nd["right"], idx[~mask]))
    return out


def predict_raw(trees, X: np.ndarray, n_classes: int) -> np.ndarray:
    """Sum tree outputs per class; shape (rows, n_classes)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    scores = np.zeros((X.shape[0], n_classes))
    for round_trees in trees:
        for cls, node in enumerate(round_trees):
            scores[:, cls] += tree_predict(node, X)
    return scores


# ---------------------------------------------------------------------------
# boosting loop

@dataclass
class BoostResult:
    trees: list = field(default_factory=list)  # [round][class] nested node dicts
    train_loss: list = field(default_factory=list)
    holdout_loss: list = field(default_factory=list)
    feature_gain: np.ndarray | None = None
    rounds_run: int = 0


def fit_boosted(X, err, params: BoostParams, objective="weighted-loss") -> BoostResult:
    """Train the ensemble; stops early when the holdout loss plateaus.

    The holdout (about 10% of instances, seeded) only drives the stopping
    rule; trees are fit on the remaining instances.
    """
    X = np.asarray(X, dtype=float)
    err = np.asarray(err, dtype=float)
    n, n_classes = err.shape
    if n < 2:
        raise ValueError("need at least 2 training instances")
    grad_fn = {"weighted-loss": weighted_error_grad_hess,
               "best-class": best_class_grad_hess}[objective]

    rng = np.random.default_rng(params.seed)
    perm = rng.permutation(n)
    n_hold = min(max(1, int(round(params.holdout_fraction * n))), n - 1)
    hold_ix, fit_ix = perm[:n_hold], perm[n_hold:]
    X_fit, err_fit = X[fit_ix], err[fit_ix]
    X_hold, err_hold = X[hold_ix], err[hold_ix]

    n_fit, n_feat = X_fit.shape
    sort_idx = np.argsort(X_fit, axis=0, kind="stable")
    scores_fit = np.zeros((n_fit, n_classes))
    scores_hold = np.zeros((n_hold, n_classes))

    result = BoostResult(feature_gain=np.zeros(n_feat))
    g, h, loss = grad_fn(scores_fit, err_fit)
    _, _, hold_loss = grad_fn(scores_hold, err_hold)
    result.train_loss.append(float(loss.mean()))
    result.holdout_loss.append(float(hold_loss.mean()))
    best_hold = result.holdout_loss[0]
    stall = 0

    for _ in range(params.n_rounds):
        if params.subsample < 1.0:
            take = max(1, int(round(params.subsample * n_fit)))
            rows = np.sort(rng.permutation(n_fit)[:take])
        else:
            rows = np.arange(n_fit)
        if params.colsample < 1.0:
            take = max(1, int(round(params.colsample * n_feat)))
            feats = np.sort(rng.permutation(n_feat)[:take])
        else:
            feats = np.arange(n_feat)

        round_trees = []
        for cls in range(n_classes):
            node = _fit_tree(X_fit, g[:, cls], h[:, cls], rows, feats, sort_idx,
                             params, result.feature_gain)
            round_trees.append(node)
            scores_fit[:, cls] += tree_predict(node, X_fit)
            scores_hold[:, cls] += tree_predict(node, X_hold)
        result.trees.append(round_trees)
        result.rounds_run += 1

        g, h, loss = grad_fn(scores_fit, err_fit)
        _, _, hold_loss = grad_fn(scores_hold, err_hold)
        result.train_loss.append(float(loss.mean()))
        result.holdout_loss.append(float(hold_loss.mean()))
        if result.holdout_loss[-1] < best_hold - params.early_stopping_tol:
            best_hold = result.holdout_loss[-1]
            stall = 0
        else:
            stall += 1
            if stall >= params.early_stopping_rounds:
                break
    return result
