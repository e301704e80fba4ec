"""Per-signal feature vectors computed on 4 Hz uniform series."""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Literal

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .ingest import SignalKind, UniformSeries, UserRecord

# Half-width of the one-minute moving window at 4 Hz.
HALF_WINDOW = 120
_CHUNK = 4096


class FeatureKind(IntEnum):
    VALUES = 1
    DIFF_QUOTIENT = 2
    PEAK_INTERVAL = 3
    PEAK_VALUE = 4
    MOVING_MEAN = 5
    MOVING_MEDIAN = 6
    MOVING_STD = 7

    @classmethod
    def parse(cls, token: str | int) -> "FeatureKind":
        if isinstance(token, str):
            text = token.strip().upper().lstrip("F")
            if text.isdigit():
                return cls(int(text))
            return cls[token.strip().upper()]
        return cls(int(token))


@dataclass(frozen=True)
class SingularPoints:
    J: np.ndarray
    J_max: np.ndarray


@dataclass(frozen=True)
class FeatureVector:
    user_id: str
    signal: SignalKind
    feature: FeatureKind
    values: np.ndarray

    def __len__(self) -> int:
        return int(self.values.size)


def _values(series: UniformSeries | np.ndarray) -> np.ndarray:
    if isinstance(series, UniformSeries):
        return series.values
    return np.asarray(series, dtype=float)


def singular_points(series: UniformSeries | np.ndarray) -> SingularPoints:
    """Interior strict local extrema; a zero difference on either side disqualifies a sample."""
    x = _values(series)
    if x.size < 3:
        empty = np.empty(0, dtype=np.intp)
        return SingularPoints(empty, empty)
    d = np.diff(x)
    left, right = d[:-1], d[1:]
    # sign form of (x_j - x_{j-1}) * (x_{j+1} - x_j) < 0, immune to underflow
    is_max = (left > 0) & (right < 0)
    is_min = (left < 0) & (right > 0)
    J = np.flatnonzero(is_max | is_min) + 1
    J_max = np.flatnonzero(is_max) + 1
    return SingularPoints(J, J_max)


def difference_quotient(series: UniformSeries) -> np.ndarray:
    return np.diff(series.values) * series.rate


def peak_intervals(series: UniformSeries) -> np.ndarray:
    J = singular_points(series).J
    return np.diff(J) / series.rate


def peak_values(series: UniformSeries | np.ndarray) -> np.ndarray:
    x = _values(series)
    return x[singular_points(x).J_max]


Stat = Literal["mean", "median", "std"]


def _window_stat(block: np.ndarray, stat: Stat) -> np.ndarray:
    if stat == "mean":
        return block.mean(axis=-1)
    if stat == "median":
        return np.median(block, axis=-1)
    if block.shape[-1] < 2:
        return np.zeros(block.shape[:-1])
    return block.std(axis=-1, ddof=1)


def moving_stat(series: UniformSeries | np.ndarray, stat: Stat, half_width: int = HALF_WINDOW) -> np.ndarray:
    """Statistic over ``[i - half_width, i + half_width]`` clipped to the series.

    One output per input sample; edge windows are truncated, not padded.
    ``std`` is the sample (n - 1) standard deviation, 0 for a single-sample window.
    """
    if stat not in ("mean", "median", "std"):
        raise ValueError(f"unknown statistic {stat!r}")
    x = _values(series)
    n = x.size
    out = np.empty(n)
    width = 2 * half_width + 1
    full_lo, full_hi = half_width, n - half_width  # indices with untruncated windows
    if full_hi > full_lo:
        windows = sliding_window_view(x, width)
        for s in range(0, windows.shape[0], _CHUNK):
            block = _window_stat(windows[s : s + _CHUNK], stat)
            out[full_lo + s : full_lo + s + block.size] = block
        edges = list(range(0, full_lo)) + list(range(full_hi, n))
    else:
        edges = range(n)
    for i in edges:
        out[i] = _window_stat(x[max(0, i - half_width) : i + half_width + 1], stat)
    return out


_SESSION_EXTRACTORS = {
    FeatureKind.VALUES: lambda s: np.array(s.values),
    FeatureKind.DIFF_QUOTIENT: difference_quotient,
    FeatureKind.PEAK_INTERVAL: peak_intervals,
    FeatureKind.PEAK_VALUE: peak_values,
    FeatureKind.MOVING_MEAN: lambda s: moving_stat(s, "mean"),
    FeatureKind.MOVING_MEDIAN: lambda s: moving_stat(s, "median"),
    FeatureKind.MOVING_STD: lambda s: moving_stat(s, "std"),
}


def session_feature(series: UniformSeries, feature: FeatureKind) -> np.ndarray:
    return _SESSION_EXTRACTORS[FeatureKind(feature)](series)


def extract_feature(user: UserRecord, signal: SignalKind, feature: FeatureKind) -> FeatureVector:
    """Feature computed per session and concatenated in session order."""
    parts = [session_feature(s.series[signal], feature) for s in user.sessions]
    values = np.concatenate(parts) if parts else np.empty(0)
    return FeatureVector(user.user_id, SignalKind(signal), FeatureKind(feature), values)
