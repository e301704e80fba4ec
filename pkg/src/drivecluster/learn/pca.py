from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..errors import InsufficientDataError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PcaProjection:
    coords: np.ndarray  # (n, dims)
    explained_variance_ratio: np.ndarray  # (dims,)
    ratio_spectrum: np.ndarray  # (d,), all components
    components: np.ndarray  # (dims, d)
    mean: np.ndarray
    user_ids: tuple[str, ...] | None = None


def pca_project(points, dims: int = 2, user_ids=None) -> PcaProjection:
    """Project onto the top ``dims`` eigenvectors of the sample covariance.

    Each component is oriented so that its largest-magnitude coordinate is
    positive. Point sets with zero total variance get an all-zero spectrum.
    """
    X = np.asarray(points, dtype=float)
    if X.ndim != 2:
        raise ValueError("points must be a 2-D array")
    n, d = X.shape
    if n < 2:
        raise InsufficientDataError(f"PCA needs at least 2 points, got {n}")
    if not 1 <= dims <= d:
        raise ValueError(f"dims must lie in [1, {d}]")
    mean = X.mean(axis=0)
    centered = X - mean
    cov = centered.T @ centered / (n - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    eigvals = np.clip(eigvals[order], 0.0, None)
    eigvecs = eigvecs[:, order].T
    for v in eigvecs:
        if v[np.argmax(np.abs(v))] < 0:
            v *= -1.0
    total = eigvals.sum()
    if total > 0:
        spectrum = eigvals / total
    else:
        logger.warning("PCA input has zero variance; ratio spectrum set to zeros")
        spectrum = np.zeros(d)
    components = eigvecs[:dims]
    coords = centered @ components.T
    ids = tuple(user_ids) if user_ids is not None else None
    return PcaProjection(coords, spectrum[:dims].copy(), spectrum, components, mean, ids)
