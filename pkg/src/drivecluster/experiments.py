"""Cross-validated choice of K and subsampling robustness curves.

Both procedures take a mapping ``user_id -> feature vector`` for a single
(signal, feature) pair. Users are processed in sorted id order, and every
trial draws from its own ``SeedSequence`` keyed on the master seed and the
trial coordinates, so results do not depend on input ordering or on the
order in which trials run.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Literal, Mapping, Sequence

import numpy as np

from .errors import DegenerateRangeError, EmptySampleError, InsufficientDataError
from .histogram import N_BINS, TRIM_PERCENTILES, BinSpec, histogram_set
from .learn import kmeans, v_measure
from .learn.kmeans import N_RESTARTS, TOL

logger = logging.getLogger(__name__)

K_RANGE = tuple(range(2, 11))
TRIALS = 40
TRAIN_FRACTION = 0.7
PERCENTAGES = (100, 50, 20, 10, 5, 2, 1)
TIE_TOL = 1e-12

BinMode = Literal["local", "global"]
Method = Literal["independent", "contiguous"]
_METHOD_KEY = {"independent": 1, "contiguous": 2}


@dataclass(frozen=True)
class ClusterOptions:
    bins: int = N_BINS
    trim: tuple[float, float] = TRIM_PERCENTILES
    # "local": each split/subsample gets bins from its own value range;
    # "global": reuse the bins of the full data.
    bin_mode: BinMode = "local"
    restarts: int = N_RESTARTS
    tol: float = TOL

    def __post_init__(self):
        if self.bin_mode not in ("local", "global"):
            raise ValueError(f"bin_mode must be 'local' or 'global', got {self.bin_mode!r}")


@dataclass(frozen=True)
class CrossValResult:
    ks: tuple[int, ...]
    means: np.ndarray
    stds: np.ndarray
    scores: np.ndarray = field(repr=False)  # (len(ks), trials)
    trials: int
    optimal_k: int
    signal: str | None = None
    feature: int | None = None

    def mean_at(self, K: int) -> float:
        return float(self.means[self.ks.index(K)])

    def std_at(self, K: int) -> float:
        return float(self.stds[self.ks.index(K)])


@dataclass(frozen=True)
class SubsampleCurve:
    method: str
    K: int
    percentages: tuple[float, ...]
    means: np.ndarray
    stds: np.ndarray
    trials: int
    failed_percentage: float | None = None
    signal: str | None = None
    feature: int | None = None


class SubsampleFailure(InsufficientDataError):
    def __init__(self, percentage: float, cause: Exception):
        super().__init__(f"subsampling at {percentage}% failed: {cause}")
        self.percentage = percentage
        self.cause = cause


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def _floor_fraction(p: float, d: int) -> int:
    # guards against 0.7 * 30 == 20.999999999999996
    return int(math.floor(round(p * d, 9)))


def split_train_validation(w, frac: float = TRAIN_FRACTION, seed=None) -> tuple[np.ndarray, np.ndarray]:
    """Random permutation, first ``floor(frac * d)`` elements to training, rest to validation."""
    w = np.asarray(w, dtype=float)
    if w.size < 2:
        raise InsufficientDataError(f"split needs at least 2 values, got {w.size}")
    if not 0 < frac < 1:
        raise ValueError("frac must lie in (0, 1)")
    perm = _rng(seed).permutation(w.size)
    n_train = _floor_fraction(frac, w.size)
    return w[perm[:n_train]], w[perm[n_train:]]


def subsample_independent(w, p: float, seed=None) -> np.ndarray:
    """``floor(p * d)`` elements drawn uniformly without replacement."""
    w = np.asarray(w, dtype=float)
    if not 0 < p <= 1:
        raise ValueError("p must lie in (0, 1]")
    size = _floor_fraction(p, w.size)
    if size == 0:
        raise EmptySampleError(f"floor({p} * {w.size}) = 0 elements")
    return w[_rng(seed).choice(w.size, size=size, replace=False)]


def contiguous_indices(d: int, p: float, start: int) -> np.ndarray:
    length = _floor_fraction(p, d)
    if length == 0:
        raise EmptySampleError(f"floor({p} * {d}) = 0 elements")
    return (start + np.arange(length)) % d


def subsample_contiguous(w, p: float, seed=None) -> np.ndarray:
    """``floor(p * d)`` consecutive elements from a uniform start, wrapping around the end."""
    w = np.asarray(w, dtype=float)
    if not 0 < p <= 1:
        raise ValueError("p must lie in (0, 1]")
    if w.size == 0:
        raise EmptySampleError("cannot subsample an empty vector")
    start = int(_rng(seed).integers(w.size))
    return w[contiguous_indices(w.size, p, start)]


def select_optimal_k(means: Sequence[float], ks: Sequence[int] = K_RANGE) -> int:
    """K with the highest mean score; near-ties (1e-12) go to the smallest K."""
    means = [float(m) for m in means]
    if not means:
        raise ValueError("empty score row")
    if len(ks) != len(means):
        raise ValueError("ks and means differ in length")
    best = max(means)
    return min(k for k, m in zip(ks, means) if m >= best - TIE_TOL)


def _sorted_vectors(vectors: Mapping[str, np.ndarray]) -> dict[str, np.ndarray]:
    return {uid: np.asarray(vectors[uid], dtype=float) for uid in sorted(vectors)}


def _seed_ints(ss: np.random.SeedSequence, n: int) -> list[int]:
    return [int(x) for x in ss.generate_state(n, dtype=np.uint64)]


def _cluster(vectors, K, seed, options: ClusterOptions, bins: BinSpec | None):
    hs = histogram_set(vectors, count=options.bins, trim=options.trim, bins=bins)
    return kmeans(hs.bars, K, seed, restarts=options.restarts, tol=options.tol, user_ids=hs.user_ids)


def _full_bins(vectors, options: ClusterOptions) -> BinSpec | None:
    if options.bin_mode == "local":
        return None
    return histogram_set(vectors, count=options.bins, trim=options.trim).bins


def cross_validation_trial(vectors, K: int, trial: int, seed: int, options: ClusterOptions, bins=None) -> float:
    """One trial: split every user 70/30, cluster both halves, compare."""
    ss = np.random.SeedSequence([int(seed), int(K), int(trial)])
    split_ss, km_ss = ss.spawn(2)
    split_rng = _rng(split_ss)
    train, valid = {}, {}
    for uid, w in vectors.items():
        train[uid], valid[uid] = split_train_validation(w, TRAIN_FRACTION, split_rng)
    seed_t, seed_v = _seed_ints(km_ss, 2)
    c_train = _cluster(train, K, seed_t, options, bins)
    c_valid = _cluster(valid, K, seed_v, options, bins)
    return v_measure(c_train, c_valid)


def cross_validate(
    vectors: Mapping[str, np.ndarray],
    ks: Sequence[int] = K_RANGE,
    trials: int = TRIALS,
    seed: int = 0,
    options: ClusterOptions = ClusterOptions(),
    *,
    signal: str | None = None,
    feature: int | None = None,
) -> CrossValResult:
    """Mean/std of train-vs-validation V-measure for each K, and the selected K."""
    ks = tuple(int(k) for k in ks)
    if not ks or min(ks) < 1:
        raise ValueError("ks must be a non-empty range of positive cluster counts")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    vectors = _sorted_vectors(vectors)
    if len(vectors) < max(ks):
        raise InsufficientDataError(f"{len(vectors)} users cannot support K up to {max(ks)}")
    bins = _full_bins(vectors, options)
    scores = np.empty((len(ks), trials))
    for i, K in enumerate(ks):
        for trial in range(trials):
            scores[i, trial] = cross_validation_trial(vectors, K, trial, seed, options, bins)
    means = scores.mean(axis=1)
    stds = scores.std(axis=1)
    return CrossValResult(
        ks=ks,
        means=means,
        stds=stds,
        scores=scores,
        trials=trials,
        optimal_k=select_optimal_k(means, ks),
        signal=signal,
        feature=feature,
    )


def baseline_clustering(vectors: Mapping[str, np.ndarray], K: int, seed: int = 0, options=ClusterOptions()):
    """Full-data clustering used as reference by :func:`robustness_curve`."""
    vectors = _sorted_vectors(vectors)
    km_seed = _seed_ints(np.random.SeedSequence([int(seed), 0]), 1)[0]
    return _cluster(vectors, K, km_seed, options, None), km_seed


def robustness_curve(
    vectors: Mapping[str, np.ndarray],
    K: int,
    method: Method = "independent",
    percentages: Sequence[float] = PERCENTAGES,
    trials: int = TRIALS,
    seed: int = 0,
    options: ClusterOptions = ClusterOptions(),
    *,
    on_error: Literal["raise", "truncate"] = "raise",
    signal: str | None = None,
    feature: int | None = None,
) -> SubsampleCurve:
    """V-measure of subsample clusterings against the full-data clustering.

    All clusterings of one curve share the baseline's K-means seed, so any
    disagreement comes from the data alone. With ``on_error="truncate"`` a
    percentage whose subsamples cannot be histogrammed ends the curve and is
    reported in ``failed_percentage``; otherwise :class:`SubsampleFailure`
    is raised.
    """
    if method not in _METHOD_KEY:
        raise ValueError(f"unknown subsampling method {method!r}")
    sampler = subsample_independent if method == "independent" else subsample_contiguous
    vectors = _sorted_vectors(vectors)
    baseline, km_seed = baseline_clustering(vectors, K, seed, options)
    bins = _full_bins(vectors, options)

    done: list[float] = []
    means: list[float] = []
    stds: list[float] = []
    failed = None
    for pct in percentages:
        p = float(pct) / 100.0
        scores = np.empty(trials)
        try:
            for trial in range(trials):
                ss = np.random.SeedSequence([int(seed), _METHOD_KEY[method], int(round(float(pct) * 1000)), trial])
                rng = _rng(ss)
                sub = {uid: sampler(w, p, rng) for uid, w in vectors.items()}
                scores[trial] = v_measure(baseline, _cluster(sub, K, km_seed, options, bins))
        except (InsufficientDataError, DegenerateRangeError) as exc:
            if on_error == "raise":
                raise SubsampleFailure(float(pct), exc) from exc
            logger.warning("%s subsampling stops at %s%%: %s", method, pct, exc)
            failed = float(pct)
            break
        done.append(float(pct))
        means.append(float(scores.mean()))
        stds.append(float(scores.std()))
    return SubsampleCurve(
        method=method,
        K=K,
        percentages=tuple(done),
        means=np.array(means),
        stds=np.array(stds),
        trials=trials,
        failed_percentage=failed,
        signal=signal,
        feature=feature,
    )
