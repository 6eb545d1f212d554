"""End-to-end train / forecast / evaluate flows behind the CLI subcommands.

Every function takes a validated RunConfig, reads CSV inputs, writes CSV/JSON
outputs under ``config.out``, and returns a summary dict.  All per-series
work runs through an order-preserving map so results are identical at any
thread count.
"""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import combiner as cb
from . import pooling as pl
from .config import RunConfig
from .core import (ConfigError, DataError, Dataset, DemandSeries, format_value,
                   ingest_csv, preprocess, write_wide_csv)
from .diversity import diversity_vector, pair_labels
from .features import FEATURE_NAMES, cv2, feature_vector, idi, sbc_classify
from .forecasters import MethodId, forecast_all
from .metrics import ErrorMatrix, average_rank, rmsse, spl
from .quantiles import QUANTILE_LEVELS, residual_quantile

__all__ = [
    "run_classify",
    "run_diversity",
    "run_evaluate",
    "run_features",
    "run_forecast",
    "run_ingest",
    "run_pool",
    "run_train",
]

logger = logging.getLogger(__name__)


def _pmap(fn, items, threads: int):
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def _mapper(cfg: RunConfig):
    return lambda fn, items: _pmap(fn, items, cfg.threads)


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_prepared(cfg: RunConfig):
    """Ingest, preprocess, and drop all-zero series (logged)."""
    if not cfg.data:
        raise ConfigError("no input data: set --data")
    ds = ingest_csv(cfg.data, cfg.layout, cfg.period)
    kept, dropped = [], []
    for s in ds:
        try:
            kept.append(preprocess(s))
        except DataError as exc:
            logger.warning("dropping series %s: %s", s.id, exc)
            dropped.append((s.id, str(exc)))
    return Dataset(tuple(kept), name=ds.name), dropped


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if header:
            writer.writerow(header)
        writer.writerows(rows)


def _write_json(path: Path, doc) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _fmt(x: float) -> str:
    return format_value(float(x))


# ---------------------------------------------------------------------------
# ingest / features / classify / diversity

def run_ingest(cfg: RunConfig) -> dict:
    """Parse the input and re-emit it normalized in wide layout."""
    ds = ingest_csv(cfg.data, cfg.layout, cfg.period)
    out = _out_dir(cfg) / "normalized.csv"
    write_wide_csv(ds, out)
    return {"series": len(ds), "out": str(out)}


def run_features(cfg: RunConfig) -> dict:
    ds, dropped = _load_prepared(cfg)
    rows = []
    for s in ds:
        fv = feature_vector(s)
        cls = sbc_classify(fv.f1_idi, fv.f2_cv2)
        rows.append([s.id] + [_fmt(v) for v in fv.as_array()] + [cls.value])
    out = _out_dir(cfg) / "features.csv"
    _write_csv(out, ["id", *FEATURE_NAMES, "sbc_class"], rows)
    return {"series": len(ds), "dropped": len(dropped), "out": str(out)}


def run_classify(cfg: RunConfig) -> dict:
    ds, dropped = _load_prepared(cfg)
    rows, census = [], {}
    for s in ds:
        f1, f2 = idi(s.values), cv2(s.values)
        cls = sbc_classify(f1, f2)
        census[cls.value] = census.get(cls.value, 0) + 1
        rows.append([s.id, _fmt(f1), _fmt(f2), cls.value])
    out = _out_dir(cfg) / "classes.csv"
    _write_csv(out, ["id", "f1_idi", "f2_cv2", "sbc_class"], rows)
    summary = {"census": census, "series": len(ds), "dropped": len(dropped), "out": str(out)}
    _write_json(_out_dir(cfg) / "census.json", summary)
    return summary


def _fit_window(s: DemandSeries, cfg: RunConfig) -> np.ndarray:
    """History available to the forecaster: full in production, T-H otherwise."""
    if cfg.production:
        return s.values
    if s.T - cfg.horizon < 1:
        raise DataError(f"series {s.id} too short to hold out {cfg.horizon} periods")
    return s.values[: s.T - cfg.horizon]


def run_diversity(cfg: RunConfig) -> dict:
    ds, dropped = _load_prepared(cfg)
    methods = tuple(MethodId)

    def one(s: DemandSeries):
        try:
            hist = _fit_window(s, cfg)
        except DataError as exc:
            return s.id, str(exc)
        fm = forecast_all(s.replace_values(hist), cfg.horizon, methods)
        return s.id, diversity_vector(fm.values, hist, s.id).values

    rows, skipped = [], []
    for sid, res in _pmap(one, ds.series, cfg.threads):
        if isinstance(res, str):
            skipped.append((sid, res))
        else:
            rows.append([sid] + [_fmt(v) for v in res])
    out = _out_dir(cfg) / "diversity.csv"
    _write_csv(out, ["id", *pair_labels(len(methods))], rows)
    return {"series": len(rows), "skipped": skipped, "dropped": len(dropped), "out": str(out)}


# ---------------------------------------------------------------------------
# pooling inputs

def _pool_inputs(artifacts, instances):
    """Criterion, stacked error sequences, and the lasso design from the
    series that produced valid training instances."""
    by_id = {a.series_id: a for a in artifacts}
    arts = [by_id[inst.series_id] for inst in instances]
    err = np.vstack([inst.err for inst in instances])
    criterion = err.mean(axis=0)
    seqs = np.hstack([a.inner_actuals[None, :] - a.inner_forecasts for a in arts])
    X = np.vstack([a.inner_forecasts.T for a in arts])
    y = np.concatenate([a.inner_actuals for a in arts])
    return criterion, seqs, X, y


def _select_pool(cfg: RunConfig, artifacts, instances):
    criterion, seqs, X, y = _pool_inputs(artifacts, instances)
    if cfg.pooling == "islands":
        return pl.pool_islands(criterion, gap_mode=cfg.islands_gap_mode)
    if cfg.pooling == "screened":
        return pl.pool_screened(seqs, criterion)
    if cfg.pooling == "lasso":
        return pl.pool_lasso(X, y, criterion=criterion, seed=cfg.seed)
    raise ConfigError(f"no pooling algorithm named {cfg.pooling!r}")


def run_pool(cfg: RunConfig) -> dict:
    if cfg.pooling == "none":
        raise ConfigError("pool command needs --pooling islands|screened|lasso")
    ds, dropped = _load_prepared(cfg)
    artifacts, skipped = cb.collect_series_artifacts(ds, cfg.horizon, _mapper(cfg))
    instances, more = cb.make_instances(artifacts, cfg.mode, cfg.loss)
    if not instances:
        raise DataError("no usable series for pooling")
    sel = _select_pool(cfg, artifacts, instances)
    doc = {
        "algorithm": sel.algorithm,
        "kept": [m.label for m in sel.kept],
        "diagnostics": sel.diagnostics,
        "skipped": skipped + more,
        "dropped": dropped,
    }
    out = _out_dir(cfg) / "pool.json"
    _write_json(out, doc)
    return doc


# ---------------------------------------------------------------------------
# train

def run_train(cfg: RunConfig) -> dict:
    ds, dropped = _load_prepared(cfg)
    artifacts, skipped = cb.collect_series_artifacts(ds, cfg.horizon, _mapper(cfg))
    instances, more = cb.make_instances(artifacts, cfg.mode, cfg.loss)
    skipped = skipped + more
    if not instances:
        raise DataError("zero usable series: nothing to train on")

    selection = None
    methods = tuple(MethodId)
    if cfg.pooling != "none":
        selection = _select_pool(cfg, artifacts, instances)
        methods = selection.kept
        instances, pool_skips = cb.make_instances(artifacts, cfg.mode, cfg.loss, methods)
        skipped = skipped + pool_skips
        if not instances:
            raise DataError("zero usable series after pooling")

    hp = cfg.seeded_hyperparams()
    model = cb.train(instances, hp, cfg.mode, cfg.loss, cfg.trainer,
                     cfg.scale_rows, methods)

    out = _out_dir(cfg)
    model_path = Path(cfg.model) if cfg.model else out / "model.json"
    model_path.parent.mkdir(parents=True, exist_ok=True)
    model_path.write_text(model.to_json() + "\n", encoding="utf-8")

    _write_csv(out / "loss_trace.csv", ["round", "train_loss", "holdout_loss"],
               [[i, _fmt(tr), _fmt(ho)] for i, (tr, ho) in
                enumerate(zip(model.train_loss_trace, model.holdout_loss_trace))])
    _write_csv(out / "skipped_series.csv", ["id", "reason"], skipped)
    imp = cb.feature_importance(model)
    _write_csv(out / "feature_importance.csv", ["feature", "importance"],
               [[name, _fmt(v)] for name, v in zip(model.feature_names(), imp)])

    summary = {
        "command": "train",
        "series_total": len(ds),
        "instances": len(instances),
        "skipped": len(skipped),
        "dropped": len(dropped),
        "rounds_run": len(model.trees),
        "final_train_loss": model.train_loss_trace[-1],
        "mode": cfg.mode,
        "loss": cfg.loss,
        "trainer": cfg.trainer,
        "seed": cfg.seed,
        "methods": [m.label for m in methods],
        "pooling": None if selection is None else {
            "algorithm": selection.algorithm,
            "kept": [m.label for m in selection.kept],
        },
        "model": str(model_path),
    }

    if cfg.with_quantiles:
        qmodels = cb.train_quantile_models(artifacts, mode=cfg.mode, hyperparams=hp,
                                           trainer=cfg.trainer, scale_rows=cfg.scale_rows,
                                           methods=methods)
        qdoc = {"format_version": 1,
                "models": {f"{u:.3f}": json.loads(m.to_json()) for u, m in qmodels.items()}}
        qpath = Path(cfg.quantile_models) if cfg.quantile_models else out / "quantile_models.json"
        qpath.write_text(json.dumps(qdoc, sort_keys=True, separators=(",", ":")) + "\n",
                         encoding="utf-8")
        summary["quantile_models"] = str(qpath)

    _write_json(out / "run_summary.json", summary)
    return summary


# ---------------------------------------------------------------------------
# forecast

def _load_model(path) -> cb.MetaModel:
    try:
        return cb.MetaModel.from_json(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"model file not found: {path}") from None


def _load_quantile_models(path) -> dict[float, cb.MetaModel]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return {float(u): cb.MetaModel.from_json(json.dumps(m))
            for u, m in doc["models"].items()}


def run_forecast(cfg: RunConfig) -> dict:
    if not cfg.model:
        raise ConfigError("forecast requires --model")
    model = _load_model(cfg.model)
    if model.mode != cfg.mode:
        raise ConfigError(
            f"model mode {model.mode!r} does not match config mode {cfg.mode!r}"
        )
    qmodels = _load_quantile_models(cfg.quantile_models) if cfg.quantile_models else None
    ds, dropped = _load_prepared(cfg)
    methods = model.methods
    H = cfg.horizon
    uniform = np.full(len(methods), 1.0 / len(methods))

    def weight_for(meta: cb.MetaModel, s, fm, hist):
        """Model weights, or uniform fallback for series too short for the
        meta-training protocol."""
        if s.T < 2 * H + 2:
            return uniform, True
        if meta.mode == "fide":
            x = feature_vector(s.replace_values(hist)).as_array()
        else:
            x = diversity_vector(fm.values, hist).values
        return cb.predict_weights(meta, x).w, False

    def one(s: DemandSeries):
        try:
            hist = _fit_window(s, cfg)
        except DataError as exc:
            return ("skip", s.id, str(exc))
        fm = forecast_all(s.replace_values(hist), H, methods)
        w, fellback = weight_for(model, s, fm, hist)
        rows = [(s.id, cfg.mode.upper(), "point", "", cb.combine(fm.values, w))]
        simple = cb.simple_combiners(fm.values)
        rows.append((s.id, "SA", "point", "", simple["SA"]))
        rows.append((s.id, "Median", "point", "", simple["Median"]))
        if cfg.per_method:
            for i, m in enumerate(methods):
                rows.append((s.id, m.label, "point", "", fm.values[i]))
        weight_rows = [(s.id, "", w)]
        violations = 0
        if qmodels is not None:
            qmat = {}
            for u in sorted(qmodels):
                shifts = np.array([
                    residual_quantile(fm.fit_residuals[i], u)
                    if fm.fit_residuals[i].size else 0.0
                    for i in range(len(methods))
                ])
                qrows = np.maximum(fm.values + shifts[:, None], 0.0)
                wu, _ = weight_for(qmodels[u], s, fm, hist)
                weight_rows.append((s.id, f"{u:.3f}", wu))
                combined_q = cb.combine(qrows, wu)
                qmat[u] = combined_q
                rows.append((s.id, cfg.mode.upper(), "quantile", f"{u:.3f}", combined_q))
                rows.append((s.id, "SA", "quantile", f"{u:.3f}", qrows.mean(axis=0)))
                rows.append((s.id, "Median", "quantile", f"{u:.3f}", np.median(qrows, axis=0)))
                if cfg.per_method:
                    for i, m in enumerate(methods):
                        rows.append((s.id, m.label, "quantile", f"{u:.3f}", qrows[i]))
            levels = sorted(qmat)
            for lo, hi in zip(levels, levels[1:]):
                violations += int(np.sum(qmat[hi] < qmat[lo] - 1e-12))
        return ("ok", s.id, rows, weight_rows, fellback, violations)

    results = _pmap(one, ds.series, cfg.threads)
    out = _out_dir(cfg)
    fc_rows, w_rows, skipped = [], [], []
    fallbacks = violations = n_ok = 0
    for res in results:
        if res[0] == "skip":
            skipped.append((res[1], res[2]))
            continue
        _, _, rows, weight_rows, fellback, viol = res
        n_ok += 1
        fallbacks += int(fellback)
        violations += viol
        for sid, source, kind, u, values in rows:
            fc_rows.append([sid, source, kind, u] + [_fmt(v) for v in values])
        for sid, u, w in weight_rows:
            w_rows.append([sid, u] + [_fmt(v) for v in w])

    fc_path = out / "forecasts.csv"
    _write_csv(fc_path, ["id", "source", "kind", "u"] + [f"h{i}" for i in range(1, H + 1)],
               fc_rows)
    _write_csv(out / "weights.csv", ["id", "u"] + [m.label for m in methods], w_rows)

    summary = {
        "command": "forecast",
        "series": n_ok,
        "skipped": skipped,
        "dropped": len(dropped),
        "sa_fallbacks": fallbacks,
        "quantile_monotone_violations": violations,
        "production": cfg.production,
        "mode": cfg.mode,
        "out": str(fc_path),
    }
    _write_json(out / "run_summary.json", summary)
    return summary


# ---------------------------------------------------------------------------
# evaluate

def _read_forecasts(path) -> dict:
    """forecasts.csv -> {(id, source): {"point": array, "quantile": {u: array}}}"""
    table: dict = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        H = len(header) - 4
        for row in reader:
            sid, source, kind, u = row[:4]
            values = np.array([float(v) for v in row[4 : 4 + H]])
            entry = table.setdefault((sid, source), {"point": None, "quantile": {}})
            if kind == "point":
                entry["point"] = values
            else:
                entry["quantile"][float(u)] = values
    return table


def run_evaluate(cfg: RunConfig) -> dict:
    if not cfg.forecasts:
        raise ConfigError("evaluate requires --forecasts (a forecasts.csv)")
    ds, _ = _load_prepared(cfg)
    table = _read_forecasts(cfg.forecasts)
    by_id = {s.id: s for s in ds}
    unknown = sorted({sid for sid, _ in table} - set(by_id))
    if unknown:
        raise DataError(f"forecast ids not in dataset: {', '.join(unknown)}")

    sources = []
    for _, source in table:
        if source not in sources:
            sources.append(source)
    ids = sorted({sid for sid, _ in table})

    H = cfg.horizon
    rmsse_rows: dict[str, list] = {src: [] for src in sources}
    spl_rows: dict[str, dict[float, list]] = {src: {u: [] for u in QUANTILE_LEVELS}
                                              for src in sources}
    scored_ids, excluded = [], []
    for sid in ids:
        s = by_id[sid]
        if s.T < H + 2:
            excluded.append((sid, "too short to score"))
            continue
        hist = s.values[: s.T - H]
        actual = s.values[s.T - H :]
        if np.ptp(hist) == 0.0:
            excluded.append((sid, "undefined scale: constant history"))
            continue
        missing = [src for src in sources if (sid, src) not in table
                   or table[(sid, src)]["point"] is None]
        if missing:
            excluded.append((sid, f"missing sources: {', '.join(missing)}"))
            continue
        scored_ids.append(sid)
        for src in sources:
            entry = table[(sid, src)]
            rmsse_rows[src].append(rmsse(hist, entry["point"], actual))
            for u in QUANTILE_LEVELS:
                if u in entry["quantile"]:
                    spl_rows[src][u].append(spl(hist, entry["quantile"][u], actual, u))

    if not scored_ids:
        raise DataError("no scoreable series: nothing to evaluate")

    em = ErrorMatrix(
        loss_kind="rmsse",
        series_ids=tuple(scored_ids),
        method_ids=tuple(sources),
        values=np.column_stack([rmsse_rows[src] for src in sources]),
    )
    ranks = average_rank(em)

    header = ["source", "rmsse"] + [f"spl_{u:.3f}" for u in QUANTILE_LEVELS] + ["avg_rank"]
    rows = []
    for j, src in enumerate(sources):
        row = [src, _fmt(float(np.mean(rmsse_rows[src])))]
        for u in QUANTILE_LEVELS:
            vals = spl_rows[src][u]
            row.append(_fmt(float(np.mean(vals))) if vals else "")
        row.append(_fmt(float(ranks[j])))
        rows.append(row)
    out = _out_dir(cfg)
    _write_csv(out / "metrics.csv", header, rows)

    summary = {
        "command": "evaluate",
        "series_scored": len(scored_ids),
        "excluded": excluded,
        "sources": sources,
        "out": str(out / "metrics.csv"),
    }

    if cfg.by_class:
        classes = {sid: sbc_classify(idi(by_id[sid].values), cv2(by_id[sid].values)).value
                   for sid in scored_ids}
        class_rows = []
        for cls in sorted(set(classes.values())):
            members = [i for i, sid in enumerate(scored_ids) if classes[sid] == cls]
            for j, src in enumerate(sources):
                vals = [rmsse_rows[src][i] for i in members]
                class_rows.append([cls, src, _fmt(float(np.mean(vals))), len(members)])
        _write_csv(out / "metrics_by_class.csv",
                   ["sbc_class", "source", "rmsse", "n_series"], class_rows)
        summary["by_class"] = str(out / "metrics_by_class.csv")

    _write_json(out / "run_summary.json", summary)
    return summary
