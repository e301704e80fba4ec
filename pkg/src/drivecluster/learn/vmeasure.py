"""V-measure (beta = 1) between two labelings of the same items."""

from __future__ import annotations

import math

import numpy as np

from ..errors import AlignmentError


def _labels(x) -> np.ndarray:
    labels = getattr(x, "labels", x)
    return np.asarray(labels).ravel()


def contingency_table(a, b) -> np.ndarray:
    """Counts ``n[i, j]`` of items with label i in ``a`` and label j in ``b``."""
    a, b = _labels(a), _labels(b)
    if a.size != b.size:
        raise AlignmentError(f"labelings differ in length: {a.size} vs {b.size}")
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = np.zeros((ai.max(initial=-1) + 1, bi.max(initial=-1) + 1), dtype=np.int64)
    np.add.at(table, (ai, bi), 1)
    return table


# math.fsum is correctly rounded, so these sums do not depend on term order and
# relabeling either argument leaves the score bit-identical.
def _entropy(counts: np.ndarray, n: int) -> float:
    return -math.fsum(c / n * math.log(c / n) for c in counts.tolist() if c > 0)


def _conditional_entropy(table: np.ndarray, n: int) -> float:
    """H(rows | columns)."""
    col_sums = table.sum(axis=0).tolist()
    terms = []
    for i, row in enumerate(table.tolist()):
        for j, c in enumerate(row):
            if c > 0:
                terms.append(c / n * math.log(c / col_sums[j]))
    return -math.fsum(terms)


def homogeneity_completeness_v(a, b) -> tuple[float, float, float]:
    table = contingency_table(a, b)
    n = int(table.sum())
    if n == 0:
        return 1.0, 1.0, 1.0
    h_a = _entropy(table.sum(axis=1), n)
    h_b = _entropy(table.sum(axis=0), n)
    h = 1.0 if h_a == 0 else max(0.0, 1.0 - _conditional_entropy(table, n) / h_a)
    c = 1.0 if h_b == 0 else max(0.0, 1.0 - _conditional_entropy(table.T, n) / h_b)
    v = 0.0 if h + c == 0 else 2.0 * h * c / (h + c)
    return h, c, v


def v_measure(a, b) -> float:
    """Harmonic mean of homogeneity and completeness; symmetric, in [0, 1]."""
    return homogeneity_completeness_v(a, b)[2]
