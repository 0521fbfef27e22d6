"""Relational multi-manifold co-clustering.

Symmetric nonnegative matrix tri-factorization of a two-type relational
matrix, regularized by a learned convex combination of candidate graph
Laplacians over the sample and feature spaces.
"""

from rmc.core import FactorState, ObjectiveTrace, RelationalData, assemble_full, objective
from rmc.graphs import (
    AffinityMatrix,
    GraphLaplacian,
    ManifoldBank,
    build_bank,
    combine_laplacians,
    knn_affinity,
    laplacian,
    tau_heuristic,
)
from rmc.metrics import accuracy, nmi
from rmc.simplex import SimplexProblem, SimplexSolution, cda, emda, oracle, solve
from rmc.solver import ClusteringResult, RmcConfig, fit, update_g, update_mu, update_s

__version__ = "0.1.0"

__all__ = [
    "AffinityMatrix",
    "ClusteringResult",
    "FactorState",
    "GraphLaplacian",
    "ManifoldBank",
    "ObjectiveTrace",
    "RelationalData",
    "RmcConfig",
    "SimplexProblem",
    "SimplexSolution",
    "accuracy",
    "assemble_full",
    "build_bank",
    "cda",
    "combine_laplacians",
    "emda",
    "fit",
    "knn_affinity",
    "laplacian",
    "nmi",
    "objective",
    "oracle",
    "solve",
    "tau_heuristic",
    "update_g",
    "update_mu",
    "update_s",
]
