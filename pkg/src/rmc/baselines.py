"""Comparison methods: k-means, NMF and graph-regularized NMF.

The tri-factorization baselines with a single binary graph (dual-regularized
co-clustering in the style of DRCC/SNMTF) are configurations of
:func:`rmc.solver.fit`; see :func:`rmc.solver.single_manifold_config`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.spatial.distance import cdist

EPS = 1e-12


@dataclass
class KMeansResult:
    labels: np.ndarray
    centroids: np.ndarray
    inertia: float
    inertia_path: list = field(default_factory=list)
    n_iter: int = 0


def _plusplus_init(x: np.ndarray, c: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    centers = [x[rng.integers(n)]]
    d2 = np.sum((x - centers[0]) ** 2, axis=1)
    for _ in range(1, c):
        total = d2.sum()
        if total <= 0:
            idx = rng.integers(n)
        else:
            idx = rng.choice(n, p=d2 / total)
        centers.append(x[idx])
        d2 = np.minimum(d2, np.sum((x - x[idx]) ** 2, axis=1))
    return np.array(centers)


def lloyd(x: np.ndarray, centroids: np.ndarray, max_iter: int = 300) -> KMeansResult:
    """Lloyd iterations until the assignment stops changing.

    An emptied cluster is moved onto the point farthest from its current
    centroid, which cannot increase the inertia.
    """
    x = np.asarray(x, dtype=np.float64)
    centroids = np.array(centroids, dtype=np.float64)
    c = centroids.shape[0]
    labels = None
    path = []
    it = 0
    for it in range(1, max_iter + 1):
        d2 = cdist(x, centroids, "sqeuclidean")
        new_labels = np.argmin(d2, axis=1)
        own = d2[np.arange(x.shape[0]), new_labels]
        for j in np.flatnonzero(np.bincount(new_labels, minlength=c) == 0):
            far = int(np.argmax(own))
            centroids[j] = x[far]
            new_labels[far] = j
            own[far] = 0.0
        path.append(float(own.sum()))
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(c):
            centroids[j] = x[labels == j].mean(axis=0)
    inertia = float(np.sum((x - centroids[labels]) ** 2))
    path.append(inertia)
    return KMeansResult(labels=labels, centroids=centroids, inertia=inertia, inertia_path=path, n_iter=it)


def kmeans(points, c: int, restarts: int = 20, seed: int = 0, max_iter: int = 300) -> KMeansResult:
    """Best of ``restarts`` k-means++-seeded Lloyd runs, ranked by inertia."""
    if sp.issparse(points):
        points = points.toarray()
    x = np.asarray(points, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if not 1 <= c <= x.shape[0]:
        raise ValueError(f"need 1 <= c <= n, got c={c}, n={x.shape[0]}")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(restarts):
        res = lloyd(x, _plusplus_init(x, c, rng), max_iter)
        if best is None or res.inertia < best.inertia:
            best = res
    return best


def _dense(x):
    return x.toarray() if sp.issparse(x) else np.asarray(x, dtype=np.float64)


def nmf_objective(x, u, v, lam=0.0, laplacian=None) -> float:
    resid = _dense(x) - u @ v.T
    val = float(np.sum(resid * resid))
    if lam and laplacian is not None:
        lap = getattr(laplacian, "l", laplacian)
        val += lam * float(np.sum(v * (lap @ v)))
    return val


def _init_factors(shape, c, seed):
    rng = np.random.default_rng(seed)
    return rng.uniform(0.1, 1.0, (shape[0], c)), rng.uniform(0.1, 1.0, (shape[1], c))


def gnmf(x, c: int, laplacian=None, lam: float = 0.0, iters: int = 500, seed: int = 0, init=None):
    """Graph-regularized NMF, ``min ||X - U V^T||^2 + lam Tr(V^T L V)``, ``L = D - W``.

    ``X`` is features x samples and the graph lives on the samples (rows of V).
    Multiplicative updates::

        U <- U * (X V) / (U V^T V)
        V <- V * (X^T U + lam W V) / (V U^T U + lam D V)

    Returns ``(u, v, trace)`` where ``trace`` holds the objective after every
    iteration.
    """
    xd = _dense(x)
    if xd.min() < 0:
        raise ValueError("gnmf needs a nonnegative matrix")
    u, v = init if init is not None else _init_factors(xd.shape, c, seed)
    u, v = u.copy(), v.copy()
    use_graph = lam != 0.0 and laplacian is not None
    if use_graph:
        lap = sp.csr_matrix(getattr(laplacian, "l", laplacian))
        d = lap.diagonal()
        w = sp.diags(d) - lap
    trace = []
    for _ in range(iters):
        u *= (xd @ v) / np.maximum(u @ (v.T @ v), EPS)
        num = xd.T @ u
        den = v @ (u.T @ u)
        if use_graph:
            num = num + lam * (w @ v)
            den = den + lam * (d[:, None] * v)
        v *= num / np.maximum(den, EPS)
        trace.append(nmf_objective(xd, u, v, lam, lap if use_graph else None))
    return u, v, trace


def nmf(x, c: int, iters: int = 500, seed: int = 0, init=None):
    """Lee-Seung multiplicative NMF, ``min ||X - U V^T||_F^2``; returns ``(u, v, trace)``."""
    return gnmf(x, c, None, 0.0, iters, seed, init)
