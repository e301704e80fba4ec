"""Lloyd's K-means with k-means++ seeding and best-of-N restarts."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError, InfeasibleError

N_RESTARTS = 10
TOL = 1e-8
MAX_ITER = 300


@dataclass(frozen=True)
class Clustering:
    labels: np.ndarray
    K: int
    inertia: float
    user_ids: tuple[str, ...] | None = None
    centers: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __len__(self) -> int:
        return int(self.labels.size)


def _sq_dist(X: np.ndarray, centers: np.ndarray) -> np.ndarray:
    diff = X[:, None, :] - centers[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def kmeans_plusplus(X: np.ndarray, K: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = ((X - X[chosen[0]]) ** 2).sum(axis=1)
    for _ in range(1, K):
        total = d2.sum()
        if total > 0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            # every point coincides with a chosen center
            idx = int(rng.integers(n))
        chosen.append(idx)
        d2 = np.minimum(d2, ((X - X[idx]) ** 2).sum(axis=1))
    return X[chosen].copy()


def lloyd(X: np.ndarray, centers: np.ndarray, tol: float = TOL, max_iter: int = MAX_ITER):
    """Run Lloyd iterations from ``centers``.

    Returns ``(labels, centers, inertia, history)`` where ``history`` holds the
    inertia after every update step; it never increases.
    """
    centers = centers.astype(float, copy=True)
    K = centers.shape[0]
    rows = np.arange(X.shape[0])
    prev_labels = None
    history: list[float] = []
    for _ in range(max_iter):
        d2_all = _sq_dist(X, centers)
        labels = d2_all.argmin(axis=1)
        d2 = d2_all[rows, labels]
        counts = np.bincount(labels, minlength=K)
        for j in np.flatnonzero(counts == 0):
            far = int(d2.argmax())
            if d2[far] <= 0:
                break
            labels[far] = j
            centers[j] = X[far]
            d2[far] = 0.0
        new_centers = centers.copy()
        for j in range(K):
            members = labels == j
            if members.any():
                new_centers[j] = X[members].mean(axis=0)
        inertia = float(((X - new_centers[labels]) ** 2).sum())
        history.append(inertia)
        shift = float(np.linalg.norm(new_centers - centers))
        centers = new_centers
        if shift < tol or (prev_labels is not None and np.array_equal(labels, prev_labels)):
            break
        prev_labels = labels
    return labels, centers, history[-1], history


def _canonical(labels: np.ndarray, centers: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Relabel clusters in order of first appearance."""
    _, first = np.unique(labels, return_index=True)
    order = labels[np.sort(first)]
    unused = [j for j in range(centers.shape[0]) if j not in set(order.tolist())]
    perm = np.concatenate([order, np.array(unused, dtype=order.dtype)])
    remap = np.empty_like(perm)
    remap[perm] = np.arange(perm.size)
    return remap[labels], centers[perm]


def kmeans(
    points,
    K: int,
    seed: int = 0,
    *,
    restarts: int = N_RESTARTS,
    tol: float = TOL,
    max_iter: int = MAX_ITER,
    user_ids=None,
) -> Clustering:
    """Best-inertia K-means over ``restarts`` k-means++ initialisations.

    Restart ``r`` uses the ``r``-th child of ``SeedSequence(seed)``, so the
    result depends only on ``(points, K, seed)``. Labels are numbered by first
    appearance in ``points``.
    """
    X = np.asarray(points, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError("points must be a non-empty 2-D array")
    if K <= 0:
        raise DomainError(f"K must be positive, got {K}")
    n = X.shape[0]
    if K > n:
        raise InfeasibleError(f"cannot form {K} clusters from {n} points")
    best = None
    for child in np.random.SeedSequence(seed).spawn(restarts):
        rng = np.random.default_rng(child)
        labels, centers, inertia, _ = lloyd(X, kmeans_plusplus(X, K, rng), tol, max_iter)
        if best is None or inertia < best[2]:
            best = (labels, centers, inertia)
    labels, centers = _canonical(best[0], best[1])
    ids = tuple(user_ids) if user_ids is not None else None
    return Clustering(labels=labels, K=K, inertia=best[2], user_ids=ids, centers=centers)
