"""Demand data model, CSV ingestion, preprocessing, and train/test split plans."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "ConfigError",
    "DataError",
    "Dataset",
    "DemandSeries",
    "Period",
    "SplitPlan",
    "ingest_csv",
    "make_split",
    "preprocess",
    "write_wide_csv",
]


class DataError(ValueError):
    """Input data violates the format or value contract."""


class ConfigError(ValueError):
    """A run configuration or model/config combination is invalid."""


@dataclass(frozen=True)
class Period:
    """Sampling frequency of a demand series; ``m`` is the seasonal period."""

    kind: str
    m: int

    @classmethod
    def monthly(cls) -> "Period":
        return cls("monthly", 12)

    @classmethod
    def daily(cls) -> "Period":
        return cls("daily", 7)

    @classmethod
    def custom(cls, m: int) -> "Period":
        if m < 1:
            raise ConfigError(f"seasonal period must be positive, got {m}")
        return cls("custom", int(m))

    @classmethod
    def parse(cls, text: str) -> "Period":
        """Parse ``monthly``, ``daily``, or a bare integer (custom period)."""
        t = text.strip().lower()
        if t == "monthly":
            return cls.monthly()
        if t == "daily":
            return cls.daily()
        try:
            return cls.custom(int(t))
        except ValueError as exc:
            raise ConfigError(f"unrecognized period {text!r}") from exc


@dataclass(frozen=True)
class DemandSeries:
    """One SKU's demand history: non-negative quantities per period.

    ``values`` is stored as a read-only float64 array; instances are safe
    to share across workers.
    """

    id: str
    values: np.ndarray
    period: Period

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 1:
            raise DataError(f"series {self.id} has no values")
        if not np.all(np.isfinite(v)):
            pos = int(np.flatnonzero(~np.isfinite(v))[0]) + 1
            raise DataError(f"non-numeric demand at position {pos} of series {self.id}")
        if np.any(v < 0):
            pos = int(np.flatnonzero(v < 0)[0]) + 1
            raise DataError(f"negative demand at position {pos} of series {self.id}")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def T(self) -> int:
        return int(self.values.size)

    def replace_values(self, values: np.ndarray) -> "DemandSeries":
        return DemandSeries(self.id, np.array(values, dtype=float), self.period)


@dataclass(frozen=True)
class SplitPlan:
    """Three-way temporal split: meta-train, inner test, final test.

    Windows are stored as 1-based ``(start, end]`` interval bounds; the
    meta-train window is ``[1, meta_train_end]``.
    """

    horizon: int
    meta_train_end: int
    inner_test: tuple[int, int]
    final_test: tuple[int, int]

    @property
    def T(self) -> int:
        return self.final_test[1]


@dataclass(frozen=True)
class Dataset:
    """A named collection of demand series sharing one period."""

    series: tuple[DemandSeries, ...]
    name: str = "dataset"

    def __post_init__(self):
        object.__setattr__(self, "series", tuple(self.series))
        seen = set()
        for s in self.series:
            if s.id in seen:
                raise DataError(f"duplicate series id: {s.id}")
            seen.add(s.id)
        periods = {s.period for s in self.series}
        if len(periods) > 1:
            raise DataError(f"dataset {self.name} mixes periods: {sorted(p.kind for p in periods)}")

    def __iter__(self):
        return iter(self.series)

    def __len__(self) -> int:
        return len(self.series)

    @property
    def period(self) -> Period:
        return self.series[0].period if self.series else Period.monthly()


def preprocess(s: DemandSeries) -> DemandSeries:
    """Drop leading zeros so the series starts at its first non-zero demand."""
    nz = np.flatnonzero(s.values > 0)
    if nz.size == 0:
        raise DataError(f"no demand observed in series {s.id}")
    if nz[0] == 0:
        return s
    return s.replace_values(s.values[nz[0]:])


def make_split(s: DemandSeries, horizon: int) -> SplitPlan:
    """Split a preprocessed series of length T into T-2H / H / H windows."""
    if horizon < 1:
        raise ConfigError(f"horizon must be positive, got {horizon}")
    T = s.T
    if T < 2 * horizon + 2:
        raise DataError(
            f"series {s.id} too short for meta-training (T={T}, need >= {2 * horizon + 2})"
        )
    end = T - 2 * horizon
    return SplitPlan(
        horizon=horizon,
        meta_train_end=end,
        inner_test=(end, end + horizon),
        final_test=(end + horizon, T),
    )


def _parse_cell(text: str, series_id: str, position: int) -> float:
    try:
        v = float(text)
    except ValueError:
        raise DataError(
            f"non-numeric demand at position {position} of series {series_id}"
        ) from None
    if not np.isfinite(v):
        raise DataError(f"non-numeric demand at position {position} of series {series_id}")
    if v < 0:
        raise DataError(f"negative demand at position {position} of series {series_id}")
    return v


def _looks_like_header(cells: list[str]) -> bool:
    for c in cells[1:]:
        if c.strip() == "":
            continue
        try:
            float(c)
            return False
        except ValueError:
            return True
    return False


def ingest_csv(path, layout: str, period: Period | None = None, name: str | None = None) -> Dataset:
    """Read a demand dataset from CSV.

    ``wide`` layout: one row per series, ``id,v1,v2,...`` with an optional
    header; trailing empty cells allow ragged lengths.  ``long`` layout:
    header ``id,period,value`` required, one observation per row.
    """
    path = Path(path)
    if layout not in ("wide", "long"):
        raise ConfigError(f"unknown layout {layout!r}")
    period = period or Period.monthly()
    name = name or path.stem
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"{path}: empty file")

    series: list[DemandSeries] = []
    if layout == "wide":
        if _looks_like_header(rows[0]):
            rows = rows[1:]
        seen: set[str] = set()
        for row in rows:
            sid = row[0].strip()
            if not sid:
                raise DataError(f"{path}: row with empty series id")
            if sid in seen:
                raise DataError(f"duplicate series id: {sid}")
            seen.add(sid)
            cells = [c for c in row[1:] if c.strip() != ""]
            if not cells:
                raise DataError(f"series {sid} has no values")
            values = [_parse_cell(c, sid, i + 1) for i, c in enumerate(cells)]
            series.append(DemandSeries(sid, np.asarray(values), period))
    else:
        header = [c.strip().lower() for c in rows[0]]
        if header[:3] != ["id", "period", "value"]:
            raise DataError(f"{path}: long layout requires header 'id,period,value'")
        by_id: dict[str, list[tuple[int, float]]] = {}
        order: list[str] = []
        for row in rows[1:]:
            if len(row) < 3:
                raise DataError(f"{path}: malformed long row {row!r}")
            sid = row[0].strip()
            try:
                idx = int(row[1])
            except ValueError:
                raise DataError(f"{path}: bad period index {row[1]!r} for series {sid}") from None
            if sid not in by_id:
                by_id[sid] = []
                order.append(sid)
            if any(i == idx for i, _ in by_id[sid]):
                raise DataError(f"duplicate period {idx} for series {sid}")
            by_id[sid].append((idx, _parse_cell(row[2], sid, idx)))
        for sid in order:
            obs = sorted(by_id[sid])
            series.append(DemandSeries(sid, np.asarray([v for _, v in obs]), period))

    return Dataset(tuple(series), name=name)


def format_value(x: float) -> str:
    """Shortest decimal text that round-trips the float exactly."""
    return repr(float(x))


def write_wide_csv(ds: Dataset, path) -> None:
    """Emit a dataset in wide layout; values round-trip bit-exactly."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        for s in ds:
            writer.writerow([s.id] + [format_value(v) for v in s.values])
