"""Hand-crafted intermittent-demand features and the four-way SBC classification."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core import DataError, DemandSeries, Period

__all__ = [
    "FEATURE_NAMES",
    "FeatureVector",
    "SbcClass",
    "approx_entropy",
    "cv2",
    "feature_vector",
    "idi",
    "linear_chunk_var",
    "ratio_last_chunk",
    "sbc_classify",
    "simple_ratios",
]

FEATURE_NAMES = (
    "f1_idi",
    "f2_cv2",
    "f3_entropy",
    "f4_pct_zero",
    "f5_pct_beyond_sigma",
    "f6_linear_chunk_var",
    "f7_change_mean_abs",
    "f8_ratio_last_chunk",
    "f9_pct_zero_end",
)

# SBC quadrant boundaries on the (IDI, CV^2) plane.
IDI_BOUNDARY = 4.0 / 3.0
CV2_BOUNDARY = 0.5


class SbcClass(enum.Enum):
    SMOOTH = "smooth"
    INTERMITTENT = "intermittent"
    ERRATIC = "erratic"
    LUMPY = "lumpy"


@dataclass(frozen=True)
class FeatureVector:
    """The nine demand features of one series.

    Degenerate inputs map to finite sentinels rather than NaN: a single
    demand occurrence gives ``f1_idi = T`` and ``f2_cv2 = 0``; a constant
    or too-short series gives ``f3_entropy = 0``; fewer than two complete
    chunks give ``f6_linear_chunk_var = 0``; a single observation gives
    ``f7_change_mean_abs = 0``.
    """

    f1_idi: float
    f2_cv2: float
    f3_entropy: float
    f4_pct_zero: float
    f5_pct_beyond_sigma: float
    f6_linear_chunk_var: float
    f7_change_mean_abs: float
    f8_ratio_last_chunk: float
    f9_pct_zero_end: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in FEATURE_NAMES], dtype=float)


def _values(s) -> np.ndarray:
    return s.values if isinstance(s, DemandSeries) else np.asarray(s, dtype=float)


def idi(s) -> float:
    """Average inter-demand interval: mean gap between non-zero demands.

    Adjacent non-zero periods count as gap 1.  A series with exactly one
    demand occurrence returns T, the most pessimistic interval.
    """
    y = _values(s)
    pos = np.flatnonzero(y > 0)
    if pos.size == 0:
        raise DataError("no demand observed")
    if pos.size == 1:
        return float(y.size)
    return float(np.mean(np.diff(pos)))


def cv2(s) -> float:
    """Squared coefficient of variation of the non-zero demand sizes."""
    y = _values(s)
    sizes = y[y > 0]
    if sizes.size == 0:
        raise DataError("no demand observed")
    if sizes.size == 1:
        return 0.0
    return float((np.std(sizes, ddof=1) / np.mean(sizes)) ** 2)


def approx_entropy(s, m: int = 2, r_factor: float = 0.2) -> float:
    """Approximate entropy ApEn(m, r) with r = r_factor * sd(y).

    Templates are compared in Chebyshev distance; self-matches are
    included, the standard convention.  Constant series return 0.
    """
    y = _values(s)
    n = y.size
    if n < m + 1:
        raise DataError(f"series too short for entropy (T={n}, need >= {m + 1})")
    sd = float(np.std(y, ddof=1))
    if sd == 0.0:
        return 0.0
    r = r_factor * sd

    def phi(k: int) -> float:
        count = n - k + 1
        # windows[i] = y[i:i+k]; pairwise Chebyshev distances vectorized
        windows = np.lib.stride_tricks.sliding_window_view(y, k)
        dist = np.max(np.abs(windows[:, None, :] - windows[None, :, :]), axis=2)
        frac = np.count_nonzero(dist <= r, axis=1) / count
        return float(np.mean(np.log(frac)))

    return phi(m) - phi(m + 1)


def simple_ratios(s) -> tuple[float, float, float, float]:
    """Counting features: (pct zero, pct beyond one sigma, mean |change|, pct zero at end)."""
    y = _values(s)
    T = y.size
    f4 = float(np.count_nonzero(y == 0) / T)
    sd = float(np.std(y, ddof=1)) if T > 1 else 0.0
    f5 = float(np.count_nonzero(np.abs(y - np.mean(y)) > sd) / T)
    f7 = float(np.mean(np.abs(np.diff(y)))) if T > 1 else 0.0
    nz = np.flatnonzero(y > 0)
    run = T - 1 - int(nz[-1]) if nz.size else T
    f9 = float(run / T)
    return f4, f5, f7, f9


def linear_chunk_var(s, L: int) -> float:
    """Slope of per-chunk sample variance against chunk index.

    The series is cut into consecutive chunks of length L from the start,
    dropping an incomplete final chunk; fewer than two complete chunks
    give 0.
    """
    y = _values(s)
    n_chunks = y.size // L
    if n_chunks < 2:
        return 0.0
    chunks = y[: n_chunks * L].reshape(n_chunks, L)
    v = np.var(chunks, axis=1, ddof=1)
    x = np.arange(n_chunks, dtype=float)
    slope = float(np.polyfit(x, v, 1)[0])
    return slope


def ratio_last_chunk(s, K: int) -> float:
    """Sum of squares of the last of K chunks over the whole-series sum of squares.

    Chunks have length floor(T/K); the last chunk absorbs the remainder.
    When T < K, every observation is its own chunk (K is clamped to T).
    """
    y = _values(s)
    T = y.size
    k = min(K, T)
    width = T // k
    last = y[(k - 1) * width:]
    total = float(np.sum(y**2))
    if total == 0.0:
        raise DataError("no demand observed")
    return float(np.sum(last**2) / total)


def sbc_classify(f1: float, f2: float) -> SbcClass:
    """Four-way demand classification on (IDI, CV^2); boundary points go to the <= side."""
    sparse = f1 > IDI_BOUNDARY
    volatile = f2 > CV2_BOUNDARY
    if sparse:
        return SbcClass.LUMPY if volatile else SbcClass.INTERMITTENT
    return SbcClass.ERRATIC if volatile else SbcClass.SMOOTH


def chunk_params(period: Period) -> tuple[int, int]:
    """(L, K) chunk defaults per period: monthly (12, 4), daily (10, 10)."""
    if period.kind == "monthly":
        return 12, 4
    if period.kind == "daily":
        return 10, 10
    return max(2, period.m), 4


def feature_vector(s: DemandSeries, L: int | None = None, K: int | None = None) -> FeatureVector:
    """Compute all nine features for a preprocessed series.

    Chunk lengths default per the series period (see ``chunk_params``).
    """
    dL, dK = chunk_params(s.period)
    L = L or dL
    K = K or dK
    y = s.values
    f1 = idi(y)
    try:
        f3 = approx_entropy(y)
    except DataError:
        f3 = 0.0
    f4, f5, f7, f9 = simple_ratios(y)
    return FeatureVector(
        f1_idi=f1,
        f2_cv2=cv2(y),
        f3_entropy=f3,
        f4_pct_zero=f4,
        f5_pct_beyond_sigma=f5,
        f6_linear_chunk_var=linear_chunk_var(y, L),
        f7_change_mean_abs=f7,
        f8_ratio_last_chunk=ratio_last_chunk(y, K),
        f9_pct_zero_end=f9,
    )


def census(classes) -> dict[SbcClass, int]:
    """Count series per SBC class."""
    out = {c: 0 for c in SbcClass}
    for c in classes:
        out[c] += 1
    return out
