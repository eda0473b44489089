"""Generalized PageRank with per-node damping.

Centrality is read off the total-effects matrix ``V = (I - AW)^{-1}(I - A)``,
where ``W`` is row-stochastic and ``A`` is diagonal with entries in (0, 1).
``A = alpha I`` recovers classical PageRank.
"""
from ._backend import NAME as BACKEND
from .errors import ConvergenceError, DomainError, GenrankError, SolverError, StructuralError
from .graph import (DampingVector, GeneralizedModel, RowStochasticMatrix, ValidationReport,
                    couple_damping, from_edge_list, random_row_stochastic, validate)
from .ingest import (DriftReport, VisitCounts, VisitLog, accumulate, estimate_model,
                     row_drift)
from .sim import SimConfig, simulate_sessions
from .solver import (CentralityVector, EffectsMatrix, SolveOptions, centrality,
                     classical_pagerank, generalized_centrality_iterative, series_oracle,
                     total_effects_dense)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "CentralityVector", "ConvergenceError", "DampingVector", "DomainError",
    "DriftReport", "EffectsMatrix", "GeneralizedModel", "GenrankError", "RowStochasticMatrix",
    "SimConfig", "SolveOptions", "SolverError", "StructuralError", "ValidationReport",
    "VisitCounts", "VisitLog", "accumulate", "centrality", "classical_pagerank",
    "couple_damping", "estimate_model", "from_edge_list", "generalized_centrality_iterative",
    "random_row_stochastic", "row_drift", "series_oracle", "simulate_sessions",
    "total_effects_dense", "validate",
]
