"""Percentile trimming, shared bin construction and normalized histograms."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import BinRangeError, DegenerateRangeError, EmptyHistogramError, EmptyInputError, NoDataError

logger = logging.getLogger(__name__)

N_BINS = 10
TRIM_PERCENTILES = (2.0, 98.0)


@dataclass(frozen=True)
class BinSpec:
    lo: float
    hi: float
    count: int = N_BINS

    def __post_init__(self):
        if not self.lo < self.hi:
            raise DegenerateRangeError(f"bin range [{self.lo}, {self.hi}] is empty")
        if self.count < 1:
            raise ValueError("bin count must be >= 1")

    @property
    def edges(self) -> np.ndarray:
        edges = self.lo + np.arange(self.count + 1) * ((self.hi - self.lo) / self.count)
        edges[-1] = self.hi
        return edges

    @property
    def width(self) -> float:
        return (self.hi - self.lo) / self.count


def percentile(values: np.ndarray, pct: float) -> float:
    """Linear-interpolation percentile, zero-based rank ``pct/100 * (n - 1)``."""
    return float(np.percentile(values, pct, method="linear"))


def trim_percentiles(values, lo_pct: float = TRIM_PERCENTILES[0], hi_pct: float = TRIM_PERCENTILES[1]) -> np.ndarray:
    """Keep values inside [P_lo, P_hi] (both ends inclusive), preserving order."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise EmptyInputError("cannot trim an empty vector")
    p_lo, p_hi = np.percentile(v, [lo_pct, hi_pct], method="linear")
    return v[(v >= p_lo) & (v <= p_hi)]


def global_bin_spec(vectors: Sequence[np.ndarray], count: int = N_BINS) -> BinSpec:
    """Bins spanning the union of all (already trimmed) vectors."""
    nonempty = [np.asarray(v, dtype=float) for v in vectors if len(v)]
    if not nonempty:
        raise NoDataError("no values to build bins from")
    lo = min(float(v.min()) for v in nonempty)
    hi = max(float(v.max()) for v in nonempty)
    if not lo < hi:
        raise DegenerateRangeError(f"all values equal {lo}; cannot partition a zero-width range")
    return BinSpec(lo, hi, count)


def bin_counts(values, bins: BinSpec) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if v.size and (v.min() < bins.lo or v.max() > bins.hi):
        raise BinRangeError(f"values span [{v.min()}, {v.max()}] outside bins [{bins.lo}, {bins.hi}]")
    idx = np.searchsorted(bins.edges, v, side="right") - 1
    # last bin is closed on the right
    idx[idx == bins.count] = bins.count - 1
    return np.bincount(idx, minlength=bins.count)


def build_histogram(values, bins: BinSpec, *, user_id: str | None = None) -> np.ndarray:
    """Relative bin frequencies; bins are [e_i, e_i+1) except the last, [e_9, hi]."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise EmptyHistogramError("no values to histogram", user_id=user_id)
    counts = bin_counts(v, bins)
    return counts / counts.sum()


@dataclass(frozen=True)
class HistogramSet:
    """Histograms of one (signal, feature) across users, aligned with ``user_ids``."""

    user_ids: tuple[str, ...]
    bars: np.ndarray  # shape (n_users, count)
    bins: BinSpec
    dropped: tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.user_ids)


def trim_all(
    vectors: Mapping[str, np.ndarray],
    trim: tuple[float, float] = TRIM_PERCENTILES,
    *,
    drop_empty: bool = False,
) -> tuple[dict[str, np.ndarray], list[str]]:
    """Trim every user's vector.

    Users whose trimmed vector is empty are dropped (and returned) when
    ``drop_empty`` is set; otherwise an :class:`EmptyHistogramError` names them.
    """
    trimmed: dict[str, np.ndarray] = {}
    dropped: list[str] = []
    for uid, values in vectors.items():
        t = trim_percentiles(values, *trim) if len(values) else np.empty(0)
        if t.size == 0:
            if not drop_empty:
                raise EmptyHistogramError("vector is empty after trimming", user_id=uid)
            logger.warning("user %s dropped: empty vector after trimming", uid)
            dropped.append(uid)
            continue
        trimmed[uid] = t
    return trimmed, dropped


def histogram_set(
    vectors: Mapping[str, np.ndarray],
    *,
    count: int = N_BINS,
    trim: tuple[float, float] = TRIM_PERCENTILES,
    bins: BinSpec | None = None,
    drop_empty: bool = False,
) -> HistogramSet:
    """Trim, bin over the union W and normalize, for every user.

    With ``bins`` given, those bins are reused and trimmed values falling
    outside them are discarded before counting.
    """
    trimmed, dropped = trim_all(vectors, trim, drop_empty=drop_empty)
    if bins is None:
        bins = global_bin_spec(list(trimmed.values()), count)
    else:
        clipped = {}
        for uid, v in trimmed.items():
            kept = v[(v >= bins.lo) & (v <= bins.hi)]
            if kept.size == 0 and drop_empty:
                logger.warning("user %s dropped: no values inside the fixed bins", uid)
                dropped.append(uid)
                continue
            clipped[uid] = kept
        trimmed = clipped
    ids = tuple(trimmed)
    bars = np.empty((len(ids), bins.count))
    for i, uid in enumerate(ids):
        bars[i] = build_histogram(trimmed[uid], bins, user_id=uid)
    return HistogramSet(ids, bars, bins, tuple(dropped))
