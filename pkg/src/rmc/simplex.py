"""Minimization of ``f(mu) = s . mu + beta ||mu||^2`` over the unit simplex.

Two iterative solvers are provided, entropic mirror descent (:func:`emda`) and
pairwise coordinate descent (:func:`cda`), plus an exact reference solver
(:func:`oracle`) used to check them.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numba
import numpy as np

from rmc.core import ConfigurationError


@dataclass(frozen=True)
class SimplexProblem:
    s: np.ndarray
    beta: float

    def __post_init__(self):
        s = np.atleast_1d(np.asarray(self.s, dtype=np.float64))
        if s.ndim != 1 or s.size < 1:
            raise ConfigurationError("s must be a non-empty vector")
        if not np.all(np.isfinite(s)):
            raise ConfigurationError("s must be finite")
        if self.beta < 0:
            raise ConfigurationError("beta must be nonnegative")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "beta", float(self.beta))

    @property
    def q(self) -> int:
        return self.s.size

    def f(self, mu) -> float:
        mu = np.asarray(mu, dtype=np.float64)
        return float(self.s @ mu + self.beta * (mu @ mu))

    def grad(self, mu) -> np.ndarray:
        return 2.0 * self.beta * mu + self.s

    @property
    def lipschitz(self) -> float:
        return 2.0 * self.beta + float(np.abs(self.s).sum())


@dataclass(frozen=True)
class SimplexSolution:
    """Solver output.

    ``max_sum_error`` and ``min_entry`` summarize feasibility over every
    iterate the solver produced, not only the returned point.
    """

    mu: np.ndarray
    objective: float
    iterations: int
    max_sum_error: float = 0.0
    min_entry: float = 0.0


def _solution(problem: SimplexProblem, mu: np.ndarray, iterations: int, sum_err=None, min_entry=None) -> SimplexSolution:
    return SimplexSolution(
        mu=mu,
        objective=problem.f(mu),
        iterations=iterations,
        max_sum_error=abs(float(mu.sum()) - 1.0) if sum_err is None else float(sum_err),
        min_entry=float(mu.min()) if min_entry is None else float(min_entry),
    )


def one_hot_argmin(problem: SimplexProblem) -> SimplexSolution:
    """Exact minimizer for ``beta = 0``: all weight on the smallest score (lowest index on ties)."""
    mu = np.zeros(problem.q)
    mu[int(np.argmin(problem.s))] = 1.0
    return _solution(problem, mu, 0)


@numba.njit(cache=True)
def _emda_loop(mu, s, beta2, c, max_iters, tol):
    q = mu.size
    w = np.empty(q)
    sum_err = abs(mu.sum() - 1.0)
    min_entry = mu.min()
    m = 0
    for m in range(1, max_iters + 1):
        step = c / np.sqrt(m)
        gmin = np.inf
        for i in range(q):
            g = beta2 * mu[i] + s[i]
            w[i] = g
            if g < gmin:
                gmin = g
        total = 0.0
        for i in range(q):
            # shifting the exponent by its max leaves the normalized update unchanged
            w[i] = mu[i] * np.exp(step * (gmin - w[i]))
            total += w[i]
        delta = 0.0
        acc = 0.0
        for i in range(q):
            v = w[i] / total
            d = abs(v - mu[i])
            if d > delta:
                delta = d
            mu[i] = v
            acc += v
            if v < min_entry:
                min_entry = v
        err = abs(acc - 1.0)
        if err > sum_err:
            sum_err = err
        if delta < tol:
            break
    return m, sum_err, min_entry


def emda(problem: SimplexProblem, max_iters: int = 5000, tol: float = 1e-8) -> SimplexSolution:
    """Entropic mirror descent from the uniform point.

    Step ``t_m = sqrt(2 ln q / (m L_f^2))`` with ``L_f = 2 beta + ||s||_1``.
    The scores are first shifted so that ``min(s) = 0``; on the simplex this
    changes f by a constant only, and it keeps ``L_f`` from being inflated by
    a common offset.  Stops once an update moves mu by less than ``tol`` in
    the max norm.
    """
    q = problem.q
    if q == 1:
        return _solution(problem, np.ones(1), 0)
    mu = np.full(q, 1.0 / q)
    s = problem.s - problem.s.min()
    beta2 = 2.0 * problem.beta
    lf = beta2 + float(s.sum())
    if lf == 0.0:
        return _solution(problem, mu, 0)
    c = np.sqrt(2.0 * np.log(q)) / lf
    m, sum_err, min_entry = _emda_loop(mu, s, beta2, c, int(max_iters), float(tol))
    return _solution(problem, mu, m, sum_err, min_entry)


@numba.njit(cache=True)
def _cda_loop(mu, s, beta, sweeps, tol):
    q = mu.size
    before = np.empty(q)
    sum_err = abs(mu.sum() - 1.0)
    min_entry = mu.min()
    sweep = 0
    for sweep in range(1, sweeps + 1):
        before[:] = mu
        for i in range(q - 1):
            for j in range(i + 1, q):
                sigma = mu[i] + mu[j]
                if 2.0 * beta * sigma + (s[j] - s[i]) <= 0.0:
                    mu[i] = 0.0
                    mu[j] = sigma
                elif 2.0 * beta * sigma + (s[i] - s[j]) <= 0.0:
                    mu[i] = sigma
                    mu[j] = 0.0
                else:
                    mi = (2.0 * beta * sigma + (s[j] - s[i])) / (4.0 * beta)
                    mu[i] = mi
                    mu[j] = sigma - mi
                err = abs(mu.sum() - 1.0)
                if err > sum_err:
                    sum_err = err
                if mu[i] < min_entry:
                    min_entry = mu[i]
                if mu[j] < min_entry:
                    min_entry = mu[j]
        if np.max(np.abs(mu - before)) < tol:
            break
    return sweep, sum_err, min_entry


def cda(problem: SimplexProblem, sweeps: int = 100, tol: float = 1e-8) -> SimplexSolution:
    """Pairwise coordinate descent from the uniform point.

    Pairs (i, j), i < j, are visited in lexicographic order; each is minimized
    exactly along the segment that keeps ``mu_i + mu_j`` fixed, so the sum
    constraint is never touched.  Requires ``beta > 0``.
    """
    if problem.beta <= 0.0:
        raise ConfigurationError("cda needs beta > 0; use one_hot_argmin for beta = 0")
    q = problem.q
    if q < 2:
        raise ConfigurationError("cda needs at least two candidates")
    mu = np.full(q, 1.0 / q)
    sweep, sum_err, min_entry = _cda_loop(mu, problem.s, problem.beta, int(sweeps), float(tol))
    return _solution(problem, mu, sweep, sum_err, min_entry)


def _support_minimizer(s: np.ndarray, beta: float, support: tuple) -> np.ndarray | None:
    # stationary point of f restricted to {mu_i = 0 off support, sum mu = 1}
    idx = list(support)
    k = len(idx)
    lam = (2.0 * beta + s[idx].sum()) / k
    vals = (lam - s[idx]) / (2.0 * beta)
    if np.any(vals < 0):
        return None
    mu = np.zeros(s.size)
    mu[idx] = vals
    return mu


def enumerate_supports(problem: SimplexProblem) -> SimplexSolution:
    """Exact minimizer by trying every support set (2^q - 1 of them)."""
    if problem.beta == 0.0:
        return one_hot_argmin(problem)
    best, best_f = None, np.inf
    for k in range(1, problem.q + 1):
        for support in itertools.combinations(range(problem.q), k):
            mu = _support_minimizer(problem.s, problem.beta, support)
            if mu is None:
                continue
            val = problem.f(mu)
            if val < best_f:
                best, best_f = mu, val
    return _solution(problem, best, 0)


def water_filling(problem: SimplexProblem) -> SimplexSolution:
    """Exact minimizer as the Euclidean projection of ``-s / (2 beta)`` onto the simplex."""
    if problem.beta == 0.0:
        return one_hot_argmin(problem)
    v = -problem.s / (2.0 * problem.beta)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ks = np.arange(1, v.size + 1)
    rho = ks[u - css / ks > 0][-1]
    theta = css[rho - 1] / rho
    return _solution(problem, np.maximum(v - theta, 0.0), 0)


def grid_search(problem: SimplexProblem, resolution: float) -> SimplexSolution:
    """Best point of the regular simplex grid with spacing ``resolution``."""
    q = problem.q
    steps = int(round(1.0 / resolution))
    if q == 1:
        return _solution(problem, np.ones(1), 0)
    # all compositions of `steps` into q nonnegative parts, built one coordinate at a time
    best, best_f = None, np.inf
    for head in itertools.product(range(steps + 1), repeat=max(q - 3, 0)):
        rest = steps - sum(head)
        if rest < 0:
            continue
        a = np.arange(rest + 1)
        if q == 2:
            pts = np.stack([a, rest - a], axis=1)
        else:
            aa, bb = np.meshgrid(a, a, indexing="ij")
            keep = aa + bb <= rest
            aa, bb = aa[keep], bb[keep]
            pts = np.stack([aa, bb, rest - aa - bb], axis=1)
            if head:
                pts = np.hstack([np.tile(head, (pts.shape[0], 1)), pts])
        mus = pts / steps
        vals = mus @ problem.s + problem.beta * np.sum(mus * mus, axis=1)
        k = int(np.argmin(vals))
        if vals[k] < best_f:
            best, best_f = mus[k].copy(), vals[k]
    return _solution(problem, best, 0)


def oracle(problem: SimplexProblem, resolution: float | None = None) -> SimplexSolution:
    """Reference minimizer used to validate the iterative solvers.

    With ``resolution`` set and ``q <= 4`` the simplex grid is enumerated.
    Otherwise the result is exact: support enumeration for ``q <= 12`` and
    water-filling beyond.
    """
    if problem.beta == 0.0:
        return one_hot_argmin(problem)
    if resolution is not None and problem.q <= 4:
        return grid_search(problem, resolution)
    if problem.q <= 12:
        return enumerate_supports(problem)
    return water_filling(problem)


def solve(problem: SimplexProblem, method: str = "emda", **kwargs) -> SimplexSolution:
    """Dispatch to a solver, short-circuiting the closed-form ``beta = 0`` and ``q = 1`` cases."""
    if problem.q == 1:
        return _solution(problem, np.ones(1), 0)
    if problem.beta == 0.0:
        return one_hot_argmin(problem)
    if method == "emda":
        return emda(problem, **kwargs)
    if method == "cda":
        return cda(problem, **kwargs)
    if method == "oracle":
        return oracle(problem, **kwargs)
    raise ConfigurationError(f"unknown simplex solver {method!r}")
