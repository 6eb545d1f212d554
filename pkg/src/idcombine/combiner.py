"""Meta-learner mapping per-series features to combination weights.

Training instances pair one feature (or diversity) vector with the
per-method losses measured on the inner test window; the boosted-tree
ensemble turns raw scores into softmax weights.  SA and Median baselines
and the per-quantile model variants live here too.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from . import boosting
from .boosting import BoostParams
from .core import ConfigError, DataError, Dataset, DemandSeries, make_split, preprocess
from .diversity import diversity_vector, pair_labels
from .features import FEATURE_NAMES, feature_vector
from .forecasters import MethodId, forecast_all, method_from_label
from .metrics import rmsse, spl
from .quantiles import QUANTILE_LEVELS, residual_quantile

__all__ = [
    "MetaModel",
    "TrainingInstance",
    "WeightVector",
    "build_training_set",
    "collect_series_artifacts",
    "combine",
    "feature_importance",
    "make_instances",
    "predict_weights",
    "select_features",
    "simple_combiners",
    "train",
    "train_quantile_models",
]

logger = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class TrainingInstance:
    series_id: str
    x: np.ndarray
    err: np.ndarray


@dataclass(frozen=True)
class WeightVector:
    series_id: str
    w: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        if np.any(w < 0) or abs(float(w.sum()) - 1.0) > 1e-9:
            raise ValueError("weights must be non-negative and sum to 1")
        object.__setattr__(self, "w", w)


@dataclass
class MetaModel:
    """Trained ensemble: feature vectors in, softmax combination weights out."""

    mode: str  # "fide" | "divide"
    loss_kind: str  # "rmsse" | "spl@<u>"
    trainer: str  # "weighted-loss" | "best-class"
    methods: tuple[MethodId, ...]
    n_features: int
    hyperparams: BoostParams
    trees: list = field(default_factory=list)
    feature_gain: np.ndarray | None = None
    train_loss_trace: list | None = None
    holdout_loss_trace: list | None = None

    @property
    def n_methods(self) -> int:
        return len(self.methods)

    def feature_names(self) -> list[str]:
        if self.mode == "fide":
            return list(FEATURE_NAMES)
        return pair_labels(self.n_methods)

    def raw_scores(self, X: np.ndarray) -> np.ndarray:
        return boosting.predict_raw(self.trees, X, self.n_methods)

    def to_json(self) -> str:
        doc = {
            "format_version": MODEL_FORMAT_VERSION,
            "mode": self.mode,
            "loss_kind": self.loss_kind,
            "trainer": self.trainer,
            "methods": [m.label for m in self.methods],
            "n_features": self.n_features,
            "hyperparams": self.hyperparams.to_dict(),
            "feature_gain": list(map(float, self.feature_gain))
            if self.feature_gain is not None else None,
            "trees": self.trees,
        }
        return json.dumps(doc, sort_keys=True, indent=None, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "MetaModel":
        doc = json.loads(text)
        if doc.get("format_version") != MODEL_FORMAT_VERSION:
            raise ConfigError(f"unsupported model format_version {doc.get('format_version')!r}")
        gain = doc.get("feature_gain")
        return cls(
            mode=doc["mode"],
            loss_kind=doc["loss_kind"],
            trainer=doc["trainer"],
            methods=tuple(method_from_label(l) for l in doc["methods"]),
            n_features=int(doc["n_features"]),
            hyperparams=BoostParams.from_dict(doc["hyperparams"]),
            trees=doc["trees"],
            feature_gain=None if gain is None else np.asarray(gain, dtype=float),
        )


# ---------------------------------------------------------------------------
# training-set construction

@dataclass(frozen=True)
class SeriesArtifact:
    """Everything the meta-layer needs from one series' inner-window pass."""

    series_id: str
    history: np.ndarray  # meta-train window
    inner_forecasts: np.ndarray  # M x H, full pool, MethodId order
    inner_actuals: np.ndarray  # H
    fit_residuals: tuple[np.ndarray, ...]
    features: np.ndarray  # the nine demand features of the history


def collect_series_artifacts(ds: Dataset, horizon: int, map_fn=map):
    """Fit the full pool on each series' meta-train window and forecast the
    inner window.  Returns (artifacts, skipped) where skipped pairs series
    ids with reasons."""
    def one(s: DemandSeries):
        try:
            s = preprocess(s)
            plan = make_split(s, horizon)
        except DataError as exc:
            return s.id, str(exc)
        hist = s.values[: plan.meta_train_end]
        fit_series = s.replace_values(hist)
        fm = forecast_all(fit_series, horizon)
        fv = feature_vector(fit_series)
        return SeriesArtifact(
            series_id=s.id,
            history=hist,
            inner_forecasts=fm.values,
            inner_actuals=s.values[plan.inner_test[0] : plan.inner_test[1]],
            fit_residuals=fm.fit_residuals,
            features=fv.as_array(),
        )

    artifacts, skipped = [], []
    for res in map_fn(one, ds.series):
        if isinstance(res, SeriesArtifact):
            artifacts.append(res)
        else:
            skipped.append(res)
    return artifacts, skipped


def _error_row(art: SeriesArtifact, loss_kind: str, methods) -> np.ndarray:
    """Per-method loss on the inner window; raises DataError on undefined scale."""
    if loss_kind == "rmsse":
        return np.array([
            rmsse(art.history, art.inner_forecasts[int(m)], art.inner_actuals)
            for m in methods
        ])
    if loss_kind.startswith("spl@"):
        u = float(loss_kind.split("@", 1)[1])
        row = []
        for m in methods:
            resid = art.fit_residuals[int(m)]
            shift = residual_quantile(resid, u) if resid.size else 0.0
            qf = np.maximum(art.inner_forecasts[int(m)] + shift, 0.0)
            row.append(spl(art.history, qf, art.inner_actuals, u))
        return np.array(row)
    raise ConfigError(f"unknown loss kind {loss_kind!r}")


def make_instances(artifacts, mode: str, loss_kind: str, methods=None):
    """Assemble training instances for a pool subset from collected artifacts."""
    methods = tuple(methods) if methods is not None else tuple(MethodId)
    instances, skipped = [], []
    for art in artifacts:
        try:
            err = _error_row(art, loss_kind, methods)
        except DataError as exc:
            skipped.append((art.series_id, str(exc)))
            continue
        if not np.any(err > 0):
            skipped.append((art.series_id, "all methods exact: no gradient"))
            continue
        if mode == "fide":
            x = art.features
        elif mode == "divide":
            sub = art.inner_forecasts[[int(m) for m in methods]]
            x = diversity_vector(sub, art.history, art.series_id).values
        else:
            raise ConfigError(f"unknown mode {mode!r}")
        instances.append(TrainingInstance(series_id=art.series_id, x=x, err=err))
    return instances, skipped


def build_training_set(ds: Dataset, horizon: int, mode: str, loss_kind: str, map_fn=map):
    """One-shot pipeline from dataset to training instances (full pool)."""
    artifacts, skipped = collect_series_artifacts(ds, horizon, map_fn)
    instances, more = make_instances(artifacts, mode, loss_kind)
    return instances, skipped + more


# ---------------------------------------------------------------------------
# training and prediction

def train(instances, hyperparams: BoostParams | None = None, mode: str = "fide",
          loss_kind: str = "rmsse", trainer: str = "weighted-loss",
          scale_rows: str = "maxnorm", methods=None) -> MetaModel:
    """Fit the boosted ensemble on training instances.

    ``scale_rows="maxnorm"`` divides each error row by its max so no
    single high-loss series dominates the summed objective.
    """
    if len(instances) < 2:
        raise DataError(f"need at least 2 training instances, got {len(instances)}")
    if trainer not in ("weighted-loss", "best-class"):
        raise ConfigError(f"unknown trainer {trainer!r}")
    if scale_rows not in ("none", "maxnorm"):
        raise ConfigError(f"unknown scale_rows {scale_rows!r}")
    params = hyperparams or BoostParams()
    methods = tuple(methods) if methods is not None else tuple(MethodId)

    X = np.vstack([inst.x for inst in instances])
    err = np.vstack([inst.err for inst in instances])
    if err.shape[1] != len(methods):
        raise DataError("error rows do not match the method pool")
    if scale_rows == "maxnorm":
        mx = err.max(axis=1, keepdims=True)
        err = np.where(mx > 0, err / np.where(mx > 0, mx, 1.0), err)
    if np.ptp(X, axis=0).max() == 0.0:
        logger.warning("all feature vectors identical; model reduces to constant weights")

    result = boosting.fit_boosted(X, err, params, objective=trainer)
    return MetaModel(
        mode=mode,
        loss_kind=loss_kind,
        trainer=trainer,
        methods=methods,
        n_features=X.shape[1],
        hyperparams=params,
        trees=result.trees,
        feature_gain=result.feature_gain,
        train_loss_trace=result.train_loss,
        holdout_loss_trace=result.holdout_loss,
    )


def predict_weights(model: MetaModel, x) -> WeightVector:
    """Softmax of the summed tree scores; an untrained model gives 1/M each."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size != model.n_features:
        raise ConfigError(
            f"feature vector has dimension {x.size}, model expects {model.n_features}"
        )
    scores = model.raw_scores(x[None, :])
    return WeightVector(series_id="", w=boosting.softmax(scores)[0])


def combine(forecasts: np.ndarray, w: WeightVector | np.ndarray) -> np.ndarray:
    """Per-horizon dot product of weights with the forecast rows."""
    fm = np.asarray(forecasts, dtype=float)
    wv = w.w if isinstance(w, WeightVector) else np.asarray(w, dtype=float)
    if fm.shape[0] != wv.size:
        raise ValueError(f"{fm.shape[0]} forecast rows but {wv.size} weights")
    return wv @ fm


def simple_combiners(forecasts: np.ndarray) -> dict[str, np.ndarray]:
    """Equal-weight mean and per-horizon median of the forecast rows."""
    fm = np.asarray(forecasts, dtype=float)
    return {"SA": fm.mean(axis=0), "Median": np.median(fm, axis=0)}


def train_quantile_models(ds_or_artifacts, horizon: int | None = None, mode: str = "fide",
                          hyperparams: BoostParams | None = None,
                          trainer: str = "weighted-loss", scale_rows: str = "maxnorm",
                          methods=None, levels=QUANTILE_LEVELS, map_fn=map):
    """One model per quantile level, trained against the scaled pinball loss
    of each method's inner-window quantile forecasts."""
    if isinstance(ds_or_artifacts, Dataset):
        if horizon is None:
            raise ConfigError("horizon required when passing a Dataset")
        artifacts, _ = collect_series_artifacts(ds_or_artifacts, horizon, map_fn)
    else:
        artifacts = ds_or_artifacts
    models = {}
    for u in levels:
        loss_kind = f"spl@{u:.3f}"
        instances, _ = make_instances(artifacts, mode, loss_kind, methods)
        models[u] = train(instances, hyperparams, mode, loss_kind, trainer,
                          scale_rows, methods)
    return models


def feature_importance(model: MetaModel) -> np.ndarray:
    """Total split gain per input feature, normalized to sum to 1."""
    gain = model.feature_gain
    if gain is None:
        return np.zeros(model.n_features)
    total = float(gain.sum())
    if total <= 0.0:
        return np.zeros(model.n_features)
    return gain / total


def select_features(importances, k: int, strategy: str = "by_importance",
                    seed: int = 0) -> np.ndarray:
    """Pick k feature indices: the top-k by importance (ties by index) or a
    seeded uniform sample."""
    imp = np.asarray(importances, dtype=float)
    n = imp.size
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    if strategy == "by_importance":
        order = np.lexsort((np.arange(n), -imp))
        return np.sort(order[:k])
    if strategy == "random":
        rng = np.random.default_rng(seed)
        return np.sort(rng.choice(n, size=k, replace=False))
    raise ConfigError(f"unknown selection strategy {strategy!r}")
