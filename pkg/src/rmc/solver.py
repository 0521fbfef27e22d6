"""Alternating solver for relational multi-manifold co-clustering.

One outer iteration updates, in order, the middle matrix S (closed form), the
manifold coefficients mu (simplex QP), and the indicator blocks G1, G2
(multiplicative rule), then rescales the columns of G to unit length with the
norms pushed into S.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from rmc.baselines import kmeans
from rmc.core import (
    ConfigurationError,
    FactorState,
    ObjectiveTrace,
    RelationalData,
    check_dimensions,
    laplacian_traces,
    normalize_columns,
    objective,
)
from rmc.graphs import ManifoldBank, binary_bank, build_bank, combine_laplacians
from rmc.simplex import SimplexProblem, solve

log = logging.getLogger(__name__)

DENOM_FLOOR = 1e-12
INIT_OFFSET = 0.2
COND_LIMIT = 1e12


class SolverError(RuntimeError):
    """Raised when an iterate becomes non-finite."""


@dataclass(frozen=True)
class RmcConfig:
    c1: int
    c2: int
    alpha: float = 1.0
    beta: float | None = None
    k_neighbors: int = 5
    epsilon: float = 1e-5
    max_outer_iters: int = 500
    mu_solver: str = "emda"
    seed: int = 0
    init: str = "kmeans"
    kmeans_restarts: int = 10
    mu_max_iters: int = 5000
    mu_tol: float = 1e-8
    cda_sweeps: int = 100
    learn_mu: bool = True
    fixed_mu: tuple | None = None

    def __post_init__(self):
        if self.beta is None:
            object.__setattr__(self, "beta", 0.1 * self.alpha)
        if not self.alpha > 0 or not self.beta > 0:
            raise ConfigurationError("alpha and beta must be positive")
        if self.mu_solver not in ("emda", "cda"):
            raise ConfigurationError(f"unknown mu solver {self.mu_solver!r}")
        if self.init not in ("kmeans", "random"):
            raise ConfigurationError(f"unknown init {self.init!r}")
        if self.c1 < 1 or self.c2 < 1:
            raise ConfigurationError("cluster counts must be positive")

    def replace(self, **changes) -> "RmcConfig":
        if "alpha" in changes and "beta" not in changes:
            changes["beta"] = None
        return replace(self, **changes)


@dataclass
class ClusteringResult:
    sample_labels: np.ndarray
    feature_labels: np.ndarray
    mu: np.ndarray
    trace: ObjectiveTrace
    state: FactorState
    mu_labels: list = field(default_factory=list)
    kkt_residuals: list = field(default_factory=list)
    n_iter: int = 0
    converged: bool = False
    config: RmcConfig | None = None


def _inv_or_pinv(m: np.ndarray, name: str) -> np.ndarray:
    if np.linalg.cond(m) > COND_LIMIT:
        warnings.warn(f"{name} is rank deficient; using the pseudo-inverse", RuntimeWarning, stacklevel=3)
        return np.linalg.pinv(m)
    return np.linalg.inv(m)


def update_s(r: RelationalData, state: FactorState) -> FactorState:
    """``S12 = (G1^T G1)^-1 G1^T R12 G2 (G2^T G2)^-1``, the least-squares middle matrix."""
    check_dimensions(r, state)
    m1 = _inv_or_pinv(state.g1.T @ state.g1, "G1^T G1")
    m2 = _inv_or_pinv(state.g2.T @ state.g2, "G2^T G2")
    x = state.g1.T @ np.asarray(r.r12 @ state.g2)
    return state.replace(s12=m1 @ x @ m2)


def _split(m):
    """Positive and negative parts, ``(|M| + M) / 2`` and ``(|M| - M) / 2``."""
    a = abs(m)
    return (a + m) / 2, (a - m) / 2


def _block_step(g, a, b, lap, alpha):
    a_pos, a_neg = _split(a)
    b_pos, b_neg = _split(b)
    num = a_pos + g @ b_neg
    den = a_neg + g @ b_pos
    if alpha != 0.0:
        l_pos, l_neg = _split(lap.l)
        num = num + alpha * (l_neg @ g)
        den = den + alpha * (l_pos @ g)
    ratio = num / np.maximum(den, DENOM_FLOOR)
    out = g * np.sqrt(ratio)
    if not np.all(np.isfinite(out)):
        raise SolverError("non-finite entries in the G update")
    return out


def block_gradients(r: RelationalData, state: FactorState):
    """``(A1, B1, A2, B2)`` with ``A = R G S^T`` and ``B = S^T G^T G S`` restricted to the diagonal blocks."""
    s = state.s12
    a1 = np.asarray(r.r12 @ state.g2) @ s.T
    b1 = s @ (state.g2.T @ state.g2) @ s.T
    a2 = np.asarray(r.r12.T @ state.g1) @ s
    b2 = s.T @ (state.g1.T @ state.g1) @ s
    return a1, b1, a2, b2


def update_g(r: RelationalData, state: FactorState, laplacians, alpha: float) -> FactorState:
    """Multiplicative update of the indicator blocks.

    ``G <- G * sqrt((alpha L^- G + A^+ + G B^-) / (alpha L^+ G + A^- + G B^+))``
    applied to G1 (feature Laplacian) and then to G2 (sample Laplacian), with
    A and B recomputed from the new G1 before the G2 step.  Fixed points are
    exactly the states with ``(alpha L G - A + G B) * G = 0``.

    ``laplacians`` is a ``(feature, sample)`` pair.  Since the reconstruction
    error counts ``R12`` twice, the update descends
    ``||R - G S G^T||^2 + 2 alpha Tr(G^T L G)``; pass half the objective's
    graph weight.
    """
    check_dimensions(r, state)
    lap_feat, lap_samp = laplacians
    if lap_feat.n != r.n1 or lap_samp.n != r.n2:
        raise ConfigurationError("Laplacians do not match the feature/sample spaces")
    s = state.s12
    a1 = np.asarray(r.r12 @ state.g2) @ s.T
    b1 = s @ (state.g2.T @ state.g2) @ s.T
    g1 = _block_step(state.g1, a1, b1, lap_feat, alpha)
    a2 = np.asarray(r.r12.T @ g1) @ s
    b2 = s.T @ (g1.T @ g1) @ s
    g2 = _block_step(state.g2, a2, b2, lap_samp, alpha)
    return state.replace(g1=g1, g2=g2)


def kkt_residual(r: RelationalData, state: FactorState, laplacians, alpha: float) -> float:
    """``max |(alpha L G - A + G B) * G|`` over both blocks."""
    a1, b1, a2, b2 = block_gradients(r, state)
    lap_feat, lap_samp = laplacians
    res1 = (alpha * (lap_feat.l @ state.g1) - a1 + state.g1 @ b1) * state.g1
    res2 = (alpha * (lap_samp.l @ state.g2) - a2 + state.g2 @ b2) * state.g2
    return float(max(np.abs(res1).max(), np.abs(res2).max()))


def mu_problem(state: FactorState, bank: ManifoldBank, beta: float, alpha: float = 1.0) -> SimplexProblem:
    traces = laplacian_traces(state, bank.feature_laplacians, bank.sample_laplacians)
    return SimplexProblem(alpha * traces, beta)


def update_mu(
    state: FactorState,
    bank: ManifoldBank,
    beta: float,
    solver: str = "emda",
    alpha: float = 1.0,
    **solver_kwargs,
) -> FactorState:
    """Re-solve the manifold coefficients with G fixed.

    Candidate i is scored by ``alpha * (Tr(G1^T L1_i G1) + Tr(G2^T L2_i G2))``
    (one coefficient shared by both spaces) and
    ``min_mu sum_i mu_i s_i + beta ||mu||^2`` is solved over the simplex.
    With ``alpha`` equal to the objective's graph weight this is the exact
    restriction of the full objective to mu.

    The current mu is kept if the solver's answer scores worse on the new
    problem (an iteration-capped EMDA run can stop short of the optimum).
    """
    problem = mu_problem(state, bank, beta, alpha)
    sol = solve(problem, solver, **solver_kwargs)
    if state.mu.shape == sol.mu.shape and problem.f(state.mu) < sol.objective:
        return state
    return state.replace(mu=sol.mu)


def _indicator(labels: np.ndarray, c: int) -> np.ndarray:
    g = np.zeros((labels.size, c))
    g[np.arange(labels.size), labels] = 1.0
    return g


def _kmeans_labels(points, c: int, seed: int, restarts: int) -> np.ndarray:
    for attempt in range(10):
        res = kmeans(points, c, restarts=restarts, seed=seed + attempt)
        if np.bincount(res.labels, minlength=c).min() > 0:
            return res.labels
        log.warning("k-means left an empty cluster; reseeding (attempt %d)", attempt + 1)
    raise SolverError(f"k-means could not fill {c} clusters in 10 attempts")


def initialize(r: RelationalData, cfg: RmcConfig, q: int) -> FactorState:
    """k-means indicators on samples (columns) and features (rows), plus a constant offset."""
    if cfg.c1 >= r.n1 or cfg.c2 >= r.n2:
        raise ConfigurationError(f"need c1 < n1 and c2 < n2, got ({cfg.c1}, {cfg.c2}) for {r.n1}x{r.n2}")
    if cfg.init == "kmeans":
        g2 = _indicator(_kmeans_labels(r.r12.T, cfg.c2, cfg.seed, cfg.kmeans_restarts), cfg.c2)
        g1 = _indicator(_kmeans_labels(r.r12, cfg.c1, cfg.seed, cfg.kmeans_restarts), cfg.c1)
        g1 += INIT_OFFSET
        g2 += INIT_OFFSET
    else:
        rng = np.random.default_rng(cfg.seed)
        g1 = rng.uniform(0.1, 1.0, (r.n1, cfg.c1))
        g2 = rng.uniform(0.1, 1.0, (r.n2, cfg.c2))
    if cfg.fixed_mu is not None:
        mu = np.asarray(cfg.fixed_mu, dtype=np.float64)
        if mu.shape != (q,):
            raise ConfigurationError(f"fixed_mu has length {mu.size}, bank has {q}")
    else:
        mu = np.full(q, 1.0 / q)
    state = FactorState(g1=g1, g2=g2, s12=np.zeros((cfg.c1, cfg.c2)), mu=mu)
    return normalize_columns(state)


def _mu_kwargs(cfg: RmcConfig) -> dict:
    if cfg.mu_solver == "emda":
        return {"max_iters": cfg.mu_max_iters, "tol": cfg.mu_tol}
    return {"sweeps": cfg.cda_sweeps, "tol": cfg.mu_tol}


def fit(r: RelationalData, cfg: RmcConfig, bank: ManifoldBank | None = None) -> ClusteringResult:
    """Run the alternating solver until the relative objective change drops below ``epsilon``.

    Without an explicit ``bank`` the eleven-candidate bank is built from the
    data with ``cfg.k_neighbors`` neighbours.  Hard labels are the row-wise
    argmax of G2 (samples) and G1 (features).
    """
    if not isinstance(r, RelationalData):
        r = RelationalData(r)
    if bank is None:
        bank = build_bank(r, cfg.k_neighbors)
    state = initialize(r, cfg, len(bank))
    learn_mu = cfg.learn_mu and cfg.fixed_mu is None and len(bank) > 1
    mu_kwargs = _mu_kwargs(cfg)
    # the multiplicative rule's graph weight that matches the objective's alpha
    rule_alpha = cfg.alpha / 2.0

    trace = ObjectiveTrace()
    kkt = []
    converged = False
    it = 0
    for it in range(1, cfg.max_outer_iters + 1):
        state = update_s(r, state)
        if learn_mu:
            state = update_mu(state, bank, cfg.beta, cfg.mu_solver, alpha=cfg.alpha, **mu_kwargs)
        laps = (
            combine_laplacians(bank.feature_laplacians, state.mu),
            combine_laplacians(bank.sample_laplacians, state.mu),
        )
        state = update_g(r, state, laps, rule_alpha)
        state = normalize_columns(state)
        trace.append(objective(r, state, bank, cfg.alpha, cfg.beta))
        kkt.append(kkt_residual(r, state, laps, rule_alpha))
        if not np.isfinite(trace[-1]):
            raise SolverError(f"objective became non-finite at iteration {it}")
        if len(trace) > 1 and trace.relative_change() < cfg.epsilon:
            converged = True
            break

    return ClusteringResult(
        sample_labels=np.argmax(state.g2, axis=1),
        feature_labels=np.argmax(state.g1, axis=1),
        mu=state.mu.copy(),
        trace=trace,
        state=state,
        mu_labels=bank.labels(),
        kkt_residuals=kkt,
        n_iter=it,
        converged=converged,
        config=cfg,
    )


def single_manifold_config(cfg: RmcConfig) -> RmcConfig:
    """Configuration for the one-graph degeneration: mu pinned to the single candidate."""
    return cfg.replace(fixed_mu=(1.0,), learn_mu=False, beta=cfg.beta)


def fit_single_manifold(r: RelationalData, cfg: RmcConfig) -> ClusteringResult:
    """Dual graph-regularized tri-factorization with binary k-NN graphs (SNMTF/DRCC style)."""
    return fit(r, single_manifold_config(cfg), bank=binary_bank(r, cfg.k_neighbors))
