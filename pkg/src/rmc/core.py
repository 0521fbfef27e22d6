"""Block-structured relational data and factorization state.

Type-1 objects (features: words, genes, pixels) index the rows of ``r12`` and
type-2 objects (samples: documents, images) index its columns.  The full
relational matrix ``R = [[0, R12], [R12^T, 0]]`` and the block-diagonal
factor ``G = diag(G1, G2)`` are never formed by the solvers; everything here
works on the blocks.  :func:`assemble_full` exists so tests can check the
block arithmetic against the dense definition.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Sequence

import numpy as np
import scipy.sparse as sp

if TYPE_CHECKING:
    from rmc.graphs import ManifoldBank


class ConfigurationError(ValueError):
    """Inconsistent shapes or parameters handed to a solver."""


def _as_matrix(x):
    if sp.issparse(x):
        return sp.csr_matrix(x, dtype=np.float64)
    return np.asarray(x, dtype=np.float64)


@dataclass(frozen=True)
class RelationalData:
    """Nonnegative inter-type relation ``R12`` (n1 type-1 x n2 type-2 objects)."""

    r12: np.ndarray | sp.csr_matrix

    def __post_init__(self):
        r12 = _as_matrix(self.r12)
        if r12.ndim != 2:
            raise ConfigurationError("r12 must be a 2-D matrix")
        n1, n2 = r12.shape
        if n1 < 2 or n2 < 2:
            raise ConfigurationError(f"need at least 2x2 relational data, got {n1}x{n2}")
        values = r12.data if sp.issparse(r12) else r12
        if not np.all(np.isfinite(values)):
            raise ConfigurationError("r12 contains non-finite entries")
        if values.size and values.min() < 0:
            raise ConfigurationError("r12 must be nonnegative")
        object.__setattr__(self, "r12", r12)

    @property
    def n1(self) -> int:
        return self.r12.shape[0]

    @property
    def n2(self) -> int:
        return self.r12.shape[1]

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.r12)

    def dense(self) -> np.ndarray:
        return self.r12.toarray() if self.is_sparse else self.r12

    def sq_norm(self) -> float:
        if self.is_sparse:
            return float(self.r12.multiply(self.r12).sum())
        return float(np.sum(self.r12 * self.r12))


@dataclass(frozen=True)
class FactorState:
    """Current iterate: ``G1`` (n1 x c1), ``G2`` (n2 x c2), ``S12`` (c1 x c2) and ``mu``.

    ``S12`` is unconstrained in sign.  ``zero_columns`` records columns of G
    that had zero norm at the last normalization and were left untouched.
    """

    g1: np.ndarray
    g2: np.ndarray
    s12: np.ndarray
    mu: np.ndarray
    zero_columns: tuple = field(default=(), compare=False)

    @property
    def c1(self) -> int:
        return self.g1.shape[1]

    @property
    def c2(self) -> int:
        return self.g2.shape[1]

    def replace(self, **changes) -> "FactorState":
        return replace(self, **changes)

    def full_g(self) -> np.ndarray:
        n1, c1 = self.g1.shape
        n2, c2 = self.g2.shape
        g = np.zeros((n1 + n2, c1 + c2))
        g[:n1, :c1] = self.g1
        g[n1:, c1:] = self.g2
        return g

    def full_s(self) -> np.ndarray:
        c1, c2 = self.s12.shape
        s = np.zeros((c1 + c2, c1 + c2))
        s[:c1, c1:] = self.s12
        s[c1:, :c1] = self.s12.T
        return s


@dataclass
class ObjectiveTrace:
    """Objective values, one per outer iteration."""

    values: list = field(default_factory=list)

    def append(self, value: float) -> None:
        self.values.append(float(value))

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]

    def is_monotone(self, rtol: float = 1e-9) -> bool:
        v = np.asarray(self.values)
        if v.size < 2:
            return True
        return bool(np.all(v[1:] <= v[:-1] + rtol * np.abs(v[:-1])))

    def relative_change(self) -> float:
        if len(self.values) < 2:
            return np.inf
        prev, cur = self.values[-2], self.values[-1]
        if prev == 0:
            return 0.0 if cur == 0 else np.inf
        return abs(cur - prev) / abs(prev)


def assemble_full(r: RelationalData) -> np.ndarray:
    """Dense symmetric ``[[0, R12], [R12^T, 0]]``.  Test helper only.

    Also accepts a bare matrix, so blocks below the 2x2 minimum of
    :class:`RelationalData` can be assembled.
    """
    if isinstance(r, RelationalData):
        r12 = r.dense()
    else:
        r12 = np.atleast_2d(np.asarray(r, dtype=np.float64))
    n1, n2 = r12.shape
    full = np.zeros((n1 + n2, n1 + n2))
    full[:n1, n1:] = r12
    full[n1:, :n1] = r12.T
    return full


def check_dimensions(r: RelationalData, state: FactorState, q: int | None = None) -> None:
    if state.g1.shape[0] != r.n1 or state.g2.shape[0] != r.n2:
        raise ConfigurationError(
            f"G blocks have {state.g1.shape[0]} and {state.g2.shape[0]} rows; "
            f"data is {r.n1}x{r.n2}"
        )
    if state.s12.shape != (state.c1, state.c2):
        raise ConfigurationError(f"S12 has shape {state.s12.shape}, expected {(state.c1, state.c2)}")
    if q is not None and state.mu.shape != (q,):
        raise ConfigurationError(f"mu has length {state.mu.size}, bank has {q} candidates")


def reconstruction_error(r: RelationalData, state: FactorState) -> float:
    """``||R12 - G1 S12 G2^T||_F^2`` (one off-diagonal block only)."""
    if r.is_sparse:
        # expand the square so the dense n1 x n2 product is never formed
        cross = float(np.sum((state.g1.T @ (r.r12 @ state.g2)) * state.s12))
        m1 = state.g1.T @ state.g1
        m2 = state.g2.T @ state.g2
        model = float(np.sum((m1 @ state.s12 @ m2) * state.s12))
        return max(r.sq_norm() - 2.0 * cross + model, 0.0)
    resid = r.r12 - state.g1 @ state.s12 @ state.g2.T
    return float(np.sum(resid * resid))


def laplacian_traces(state: FactorState, feature_laps: Sequence, sample_laps: Sequence) -> np.ndarray:
    """Per-candidate ``Tr(G1^T L1_i G1) + Tr(G2^T L2_i G2)``."""
    out = np.empty(len(feature_laps))
    for i, (lf, ls) in enumerate(zip(feature_laps, sample_laps)):
        out[i] = quad_trace(lf, state.g1) + quad_trace(ls, state.g2)
    return out


def quad_trace(lap, g: np.ndarray) -> float:
    mat = getattr(lap, "l", lap)
    return float(np.sum(g * (mat @ g)))


def objective(
    r: RelationalData,
    state: FactorState,
    bank: "ManifoldBank",
    alpha: float,
    beta: float,
) -> float:
    """Full co-clustering objective evaluated block-wise.

    ``||R - G S G^T||_F^2 + alpha * Tr(G^T (sum_i mu_i L_i) G) + beta * ||mu||^2``,
    where the reconstruction term equals twice the ``R12`` block error and
    ``L_i = diag(feature_i, sample_i)``.
    """
    check_dimensions(r, state, len(bank))
    rec = 2.0 * reconstruction_error(r, state)
    reg = 0.0
    if alpha != 0.0:
        traces = laplacian_traces(state, bank.feature_laplacians, bank.sample_laplacians)
        reg = alpha * float(state.mu @ traces)
    return rec + reg + beta * float(state.mu @ state.mu)


def normalize_columns(state: FactorState) -> FactorState:
    """Scale every column of G1 and G2 to unit length and push the norms into S12.

    ``S12 <- N1 S12 N2`` keeps ``G1 S12 G2^T`` unchanged.  Zero columns stay as
    they are and are listed in ``zero_columns`` as ``(block, index)`` pairs.
    """
    n1 = np.linalg.norm(state.g1, axis=0)
    n2 = np.linalg.norm(state.g2, axis=0)
    zero = tuple([(1, int(j)) for j in np.flatnonzero(n1 == 0)] + [(2, int(j)) for j in np.flatnonzero(n2 == 0)])
    if zero:
        warnings.warn(f"zero-norm columns in G left unnormalized: {zero}", RuntimeWarning, stacklevel=2)
    n1 = np.where(n1 == 0, 1.0, n1)
    n2 = np.where(n2 == 0, 1.0, n2)
    return state.replace(
        g1=state.g1 / n1,
        g2=state.g2 / n2,
        s12=n1[:, None] * state.s12 * n2[None, :],
        zero_columns=zero,
    )
