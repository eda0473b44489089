"""Total-effects matrix and centrality scores.

Three routes compute the same quantities and are used to check each other:

* :func:`total_effects_dense` solves ``(I - AW) V = I - A`` by pivoted LU;
* :func:`series_oracle` sums the walk series ``sum_k (AW)^k (I - A)``;
* :func:`generalized_centrality_iterative` never forms ``V``. It iterates
  ``y <- 1/n + W^T (A y)`` and returns ``r = (I - A) y``, which equals the
  column means of ``V`` because ``1^T V = 1^T (I - AW)^{-1} (I - A)``.

With ``A = alpha I`` the last route reduces to :func:`classical_pagerank`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .errors import ConvergenceError, DomainError, SolverError
from .graph import GeneralizedModel, RowStochasticMatrix

MAX_DENSE_N = 4096
MODES = ("full_n", "exclude_diagonal")


@dataclass(frozen=True)
class SolveOptions:
    tol: float = 1e-12
    max_iters: int = 10_000

    def __post_init__(self):
        if not self.tol > 0:
            raise DomainError(f"tol must be positive, got {self.tol!r}")
        if self.max_iters < 1:
            raise DomainError(f"max_iters must be at least 1, got {self.max_iters!r}")


@dataclass(frozen=True, eq=False)
class EffectsMatrix:
    """Dense ``V``; ``values[i, j]`` is the net influence of node j on node i."""

    values: np.ndarray

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class CentralityVector:
    scores: np.ndarray
    mode: str = "full_n"
    normalized: bool = True
    iterations: int | None = None
    residual: float | None = None
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.scores)


def _aw_dense(model: GeneralizedModel) -> np.ndarray:
    return model.A.values[:, None] * model.W.toarray()


def total_effects_dense(model: GeneralizedModel, max_n: int = MAX_DENSE_N) -> EffectsMatrix:
    n = model.n
    if n > max_n:
        raise DomainError(f"dense solve refused for n={n} > {max_n}; use the iterative route")
    lhs = np.eye(n) - _aw_dense(model)
    rhs = np.diag(1.0 - model.A.values)
    try:
        V = np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"I - AW is numerically singular: {exc}") from exc
    V.flags.writeable = False
    return EffectsMatrix(V)


def series_oracle(model: GeneralizedModel, K: int) -> EffectsMatrix:
    """Partial walk sum ``(I + AW + ... + (AW)^K)(I - A)``.

    Evaluated in Horner form; every term is nonnegative so entries grow
    monotonically with ``K``. The tail is bounded by
    ``a_max^(K+1) / (1 - a_max)`` in the max-row-sum norm.
    """
    if K < 0:
        raise DomainError(f"truncation order must be nonnegative, got {K}")
    M = _aw_dense(model)
    S = np.eye(model.n)
    for _ in range(K):
        S = M @ S
        S[np.diag_indices_from(S)] += 1.0
    V = S * (1.0 - model.A.values)[None, :]
    V.flags.writeable = False
    return EffectsMatrix(V)


def series_order_for(a_max: float, bound: float) -> int:
    """Smallest ``K`` with ``a_max^(K+1) / (1 - a_max) <= bound``."""
    K = int(np.ceil(np.log(bound * (1.0 - a_max)) / np.log(a_max))) - 1
    return max(K, 0)


def centrality(V: EffectsMatrix, mode: str = "full_n", renormalize: bool = False) -> CentralityVector:
    """Column averages of ``V``.

    ``full_n`` divides column sums by ``n``. ``exclude_diagonal`` drops
    ``v_jj`` and divides by ``n - 1``; with ``renormalize`` the scores are
    then rescaled to sum to 1.
    """
    values = np.asarray(V.values)
    n = values.shape[0]
    col = np.add.reduce(values, axis=0)
    if mode == "full_n":
        return CentralityVector(col / n, mode, True)
    if mode != "exclude_diagonal":
        raise DomainError(f"unknown averaging mode {mode!r}")
    if n < 2:
        raise DomainError("exclude_diagonal averaging needs at least two nodes")
    r = (col - np.diag(values)) / (n - 1)
    if renormalize:
        r = r / r.sum()
    return CentralityVector(r, mode, bool(renormalize))


def _iterate(W: RowStochasticMatrix, scale, const: float, opts: SolveOptions):
    T = W.transpose
    x, it, residual = _backend.kernels.fixed_point(
        T.indptr, T.indices, T.data, scale, const, opts.tol, opts.max_iters
    )
    if residual > opts.tol:
        raise ConvergenceError(
            f"no convergence after {it} iterations (L1 residual {residual:.3e} > {opts.tol:.3e})",
            it, residual,
        )
    return x, it, residual


def classical_pagerank(
    W: RowStochasticMatrix, alpha: float, opts: SolveOptions = SolveOptions()
) -> CentralityVector:
    """Iterate ``r <- (1 - alpha)/n + alpha W^T r`` starting from ``(1 - alpha)/n``."""
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    r, it, residual = _iterate(W, float(alpha), (1.0 - alpha) / W.n, opts)
    r = r / r.sum()
    return CentralityVector(r, "full_n", True, it, residual)


def generalized_centrality_iterative(
    model: GeneralizedModel, opts: SolveOptions = SolveOptions(), mode: str = "full_n"
) -> CentralityVector:
    """Column-mean centrality of ``V`` without forming ``V``.

    Only ``full_n`` averaging is available here; the diagonal of ``V`` is
    needed for ``exclude_diagonal``, so use the dense route for that.
    """
    if mode != "full_n":
        raise DomainError(f"mode {mode!r} requires diag(V); use the dense solver")
    y, it, residual = _iterate(model.W, model.A.values, 1.0 / model.n, opts)
    r = (1.0 - model.A.values) * y
    r = r / r.sum()
    return CentralityVector(r, "full_n", True, it, residual)
