"""k-NN affinity graphs, their Laplacians and the candidate manifold bank."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.spatial.distance import cdist

from rmc.core import ConfigurationError, RelationalData

SCHEMES = ("binary", "heat", "cosine")

# bandwidth ladder as multiples of tau, ascending
HEAT_LADDER = (
    ("tau/100", 1 / 100),
    ("tau/60", 1 / 60),
    ("tau/30", 1 / 30),
    ("tau/10", 1 / 10),
    ("tau", 1.0),
    ("10tau", 10.0),
    ("30tau", 30.0),
    ("60tau", 60.0),
    ("100tau", 100.0),
)


@dataclass(frozen=True)
class AffinityMatrix:
    w: sp.csr_matrix
    scheme: str
    k: int
    bandwidth: float | None = None

    @property
    def n(self) -> int:
        return self.w.shape[0]


@dataclass(frozen=True)
class GraphLaplacian:
    """``L = D - W`` stored sparse, with the degree vector kept alongside."""

    l: sp.csr_matrix
    d: np.ndarray

    @property
    def n(self) -> int:
        return self.l.shape[0]

    @property
    def w(self) -> sp.csr_matrix:
        return sp.diags(self.d, format="csr") - self.l

    def toarray(self) -> np.ndarray:
        return self.l.toarray()


@dataclass(frozen=True)
class ManifoldBank:
    """Paired candidate Laplacians; entry i of both lists shares one coefficient."""

    sample_laplacians: list
    feature_laplacians: list
    provenance: list = field(default_factory=list)

    def __post_init__(self):
        q = len(self.sample_laplacians)
        if q < 1:
            raise ConfigurationError("manifold bank needs at least one candidate")
        if len(self.feature_laplacians) != q:
            raise ConfigurationError("sample and feature banks differ in length")
        if not self.provenance:
            object.__setattr__(self, "provenance", [f"candidate{i}" for i in range(q)])
        if len(self.provenance) != q:
            raise ConfigurationError("provenance length does not match the bank")

    def __len__(self) -> int:
        return len(self.sample_laplacians)

    @property
    def q(self) -> int:
        return len(self)

    def subset(self, indices: Sequence[int]) -> "ManifoldBank":
        return ManifoldBank(
            [self.sample_laplacians[i] for i in indices],
            [self.feature_laplacians[i] for i in indices],
            [self.provenance[i] for i in indices],
        )

    def labels(self) -> list:
        return [p["label"] if isinstance(p, dict) else str(p) for p in self.provenance]


def _dense_points(points) -> np.ndarray:
    if sp.issparse(points):
        points = points.toarray()
    x = np.asarray(points, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    return x


def knn_indices(points, k: int, sqdist: np.ndarray | None = None) -> np.ndarray:
    """Indices of the k nearest neighbours of every row, self excluded.

    Equal distances go to the lower index.
    """
    x = _dense_points(points)
    n = x.shape[0]
    if not 1 <= k < n:
        raise ConfigurationError(f"need 1 <= k < n, got k={k}, n={n}")
    if sqdist is None:
        sqdist = cdist(x, x, "sqeuclidean")
    d = sqdist.copy()
    np.fill_diagonal(d, np.inf)
    return np.argsort(d, axis=1, kind="stable")[:, :k]


def knn_affinity(points, k: int, scheme: str = "binary", bandwidth: float | None = None) -> AffinityMatrix:
    """Symmetric k-NN affinity over the rows of ``points``.

    An edge (i, j) exists if j is among the k nearest neighbours of i or vice
    versa.  Weights are 1 (``binary``), ``exp(-||xi - xj||^2 / bandwidth)``
    (``heat``) or the cosine of the two vectors clamped at 0 (``cosine``).
    """
    if scheme not in SCHEMES:
        raise ConfigurationError(f"unknown weighting scheme {scheme!r}")
    if (scheme == "heat") != (bandwidth is not None):
        raise ConfigurationError("bandwidth is required for the heat kernel and only for it")
    if bandwidth is not None and not bandwidth > 0:
        raise ConfigurationError("bandwidth must be positive")

    x = _dense_points(points)
    n = x.shape[0]
    sqdist = cdist(x, x, "sqeuclidean")
    nbrs = knn_indices(x, k, sqdist)
    rows = np.repeat(np.arange(n), k)
    cols = nbrs.ravel()

    if scheme == "binary":
        vals = np.ones(rows.size)
    elif scheme == "heat":
        vals = np.exp(-sqdist[rows, cols] / bandwidth)
    else:
        norms = np.linalg.norm(x, axis=1)
        if np.any(norms == 0):
            warnings.warn("zero-norm objects get cosine weight 0", RuntimeWarning, stacklevel=2)
        safe = np.where(norms == 0, 1.0, norms)
        dots = np.einsum("ij,ij->i", x[rows], x[cols])
        vals = dots / (safe[rows] * safe[cols])
        vals[(norms[rows] == 0) | (norms[cols] == 0)] = 0.0
        vals = np.clip(vals, 0.0, 1.0)

    w = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    w = w.maximum(w.T).tocsr()
    w.setdiag(0.0)
    w.eliminate_zeros()
    w.sort_indices()
    return AffinityMatrix(w=w, scheme=scheme, k=k, bandwidth=bandwidth)


def laplacian(w) -> GraphLaplacian:
    """``L = D - W`` for a symmetric nonnegative affinity."""
    if isinstance(w, AffinityMatrix):
        w = w.w
    w = sp.csr_matrix(w, dtype=np.float64)
    d = np.asarray(w.sum(axis=1)).ravel()
    lap = (sp.diags(d, format="csr") - w).tocsr()
    lap.sort_indices()
    return GraphLaplacian(l=lap, d=d)


def tau_heuristic(points) -> float:
    """Inverse of the mean squared distance over all ordered pairs (i = j included)."""
    x = _dense_points(points)
    n = x.shape[0]
    if n < 2:
        raise ConfigurationError("tau needs at least two objects")
    # sum_{i,j} ||xi - xj||^2 = 2 n sum_i ||xi||^2 - 2 ||sum_i xi||^2
    centred = x - x.mean(axis=0)
    mean_sq = 2.0 * np.sum(centred * centred) / n
    if mean_sq <= 0:
        raise ConfigurationError("all objects identical; the heat-kernel bandwidth is undefined")
    return 1.0 / mean_sq


def space_bank(points, k: int) -> tuple[list, list]:
    """Eleven candidate Laplacians over one space, with provenance records."""
    tau = tau_heuristic(points)
    laps, prov = [], []
    for label, factor in HEAT_LADDER:
        t = tau * factor
        laps.append(laplacian(knn_affinity(points, k, "heat", bandwidth=t)))
        prov.append({"label": f"heat({label})", "scheme": "heat", "bandwidth": t, "tau": tau})
    laps.append(laplacian(knn_affinity(points, k, "binary")))
    prov.append({"label": "binary", "scheme": "binary", "bandwidth": None, "tau": tau})
    laps.append(laplacian(knn_affinity(points, k, "cosine")))
    prov.append({"label": "cosine", "scheme": "cosine", "bandwidth": None, "tau": tau})
    return laps, prov


def build_bank(r: RelationalData, k: int = 5) -> ManifoldBank:
    """Candidate bank for both spaces: 9 heat kernels (ascending t), binary, cosine.

    Samples are the columns of ``r12`` and features its rows; tau is computed
    separately per space.
    """
    sample_laps, sample_prov = space_bank(r.r12.T, k)
    feature_laps, feature_prov = space_bank(r.r12, k)
    prov = [
        {
            "label": s["label"],
            "scheme": s["scheme"],
            "sample_bandwidth": s["bandwidth"],
            "feature_bandwidth": f["bandwidth"],
            "sample_tau": s["tau"],
            "feature_tau": f["tau"],
        }
        for s, f in zip(sample_prov, feature_prov)
    ]
    return ManifoldBank(sample_laps, feature_laps, prov)


def binary_bank(r: RelationalData, k: int = 5) -> ManifoldBank:
    """Single-candidate bank with binary k-NN graphs on both spaces."""
    ls = laplacian(knn_affinity(r.r12.T, k, "binary"))
    lf = laplacian(knn_affinity(r.r12, k, "binary"))
    return ManifoldBank([ls], [lf], [{"label": "binary", "scheme": "binary"}])


def check_simplex(mu, q: int | None = None, tol: float = 1e-6) -> np.ndarray:
    mu = np.asarray(mu, dtype=np.float64)
    if q is not None and mu.shape != (q,):
        raise ConfigurationError(f"mu has shape {mu.shape}, expected ({q},)")
    if mu.min() < -tol or abs(mu.sum() - 1.0) > tol:
        raise ConfigurationError("mu is not on the unit simplex")
    return mu


def combine_laplacians(laplacians: Sequence[GraphLaplacian], mu) -> GraphLaplacian:
    """Convex combination ``sum_i mu_i L_i``; the result is again a graph Laplacian."""
    mu = check_simplex(mu, len(laplacians))
    nz = np.flatnonzero(mu)
    if nz.size == 1 and mu[nz[0]] == 1.0:
        return laplacians[nz[0]]
    lap = sp.csr_matrix(laplacians[0].l.shape)
    d = np.zeros(laplacians[0].n)
    for m, li in zip(mu, laplacians):
        if m != 0.0:
            lap = lap + m * li.l
            d = d + m * li.d
    lap = lap.tocsr()
    lap.sort_indices()
    return GraphLaplacian(l=lap, d=d)
