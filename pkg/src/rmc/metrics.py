"""Clustering accuracy under the best label matching, and max-normalized NMI."""

import numpy as np
from scipy.optimize import linear_sum_assignment


def _check_pair(truth, predicted):
    truth = np.asarray(truth)
    predicted = np.asarray(predicted)
    if truth.shape != predicted.shape or truth.ndim != 1:
        raise ValueError(f"label vectors differ in shape: {truth.shape} vs {predicted.shape}")
    if truth.size == 0:
        raise ValueError("empty label vectors")
    return truth, predicted


def contingency(truth, predicted) -> np.ndarray:
    """Counts ``n[i, j]`` of objects with true class i and predicted cluster j."""
    truth, predicted = _check_pair(truth, predicted)
    _, t = np.unique(truth, return_inverse=True)
    _, p = np.unique(predicted, return_inverse=True)
    table = np.zeros((t.max() + 1, p.max() + 1), dtype=np.int64)
    np.add.at(table, (t, p), 1)
    return table


def accuracy(truth, predicted) -> float:
    """Fraction of objects whose predicted cluster maps to their true class.

    The cluster-to-class map is the one-to-one assignment maximizing the number
    of matches (Hungarian method on the contingency table, padded to square).
    """
    table = contingency(truth, predicted)
    size = max(table.shape)
    padded = np.zeros((size, size), dtype=np.int64)
    padded[: table.shape[0], : table.shape[1]] = table
    rows, cols = linear_sum_assignment(padded, maximize=True)
    return float(padded[rows, cols].sum() / table.sum())


def _entropy(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


_AVERAGES = {
    "max": max,
    "arithmetic": lambda a, b: (a + b) / 2.0,
    "geometric": lambda a, b: float(np.sqrt(a * b)),
}


def nmi(truth, predicted, average: str = "max") -> float:
    """Mutual information (base 2) divided by ``max(H(C), H(C'))``.

    ``average`` selects another normalizer (``"arithmetic"`` or
    ``"geometric"`` mean of the two entropies) for comparison with other
    conventions.  When both partitions have zero entropy (a single cluster
    each) the ratio is 0/0; it is defined as 1.
    """
    if average not in _AVERAGES:
        raise ValueError(f"unknown average {average!r}")
    table = contingency(truth, predicted).astype(np.float64)
    n = table.sum()
    pxy = table / n
    px = pxy.sum(axis=1)
    py = pxy.sum(axis=0)
    hx, hy = _entropy(px), _entropy(py)
    if hx == 0.0 and hy == 0.0:
        # both partitions are a single block, so they are identical up to naming
        return 1.0
    denom = _AVERAGES[average](hx, hy)
    if denom == 0.0:
        # one partition is a single block, so the mutual information is zero
        return 0.0
    nz = pxy > 0
    mi = float(np.sum(pxy[nz] * np.log2(pxy[nz] / np.outer(px, py)[nz])))
    return min(max(mi / denom, 0.0), 1.0)
