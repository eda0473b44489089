"""Model data types: row-stochastic weight matrix, damping vector, coupling.

The weight matrix is stored in compressed-row form (``indptr``, ``indices``,
``data``) with strictly increasing column indices per row and no explicit
zeros. Every array held by these types is flagged read-only, so instances
can be shared between threads without copying.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from os import PathLike
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import DomainError, StructuralError

ROW_TOL = 1e-9
DEFAULT_EPS = 1e-6
DANGLING_POLICIES = ("self_sink", "uniform")


class SparseRows(NamedTuple):
    """Unvalidated compressed-row candidate, as read from a file."""

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray


@dataclass(frozen=True)
class Violation:
    row: int
    kind: str
    value: float


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        if self.ok:
            return "ok"
        lines = [f"{len(self.violations)} violation(s)"]
        lines += [f"row {v.row}: {v.kind} = {v.value!r}" for v in self.violations]
        return "\n".join(lines)


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def _row_ids(indptr: np.ndarray) -> np.ndarray:
    return np.repeat(np.arange(len(indptr) - 1, dtype=np.int64), np.diff(indptr))


def _as_sparse(M) -> SparseRows:
    """Coerce a candidate (dense array-like or compressed rows) to SparseRows."""
    if all(hasattr(M, k) for k in ("n", "indptr", "indices", "data")):
        n = int(M.n)
        indptr = np.asarray(M.indptr, dtype=np.int64)
        indices = np.asarray(M.indices, dtype=np.int64)
        data = np.asarray(M.data, dtype=np.float64)
        if n < 1:
            raise StructuralError(f"node count must be positive, got {n}")
        if indptr.ndim != 1 or len(indptr) != n + 1:
            raise StructuralError(f"indptr has length {len(indptr)}, expected {n + 1}")
        if indptr[0] != 0 or np.any(np.diff(indptr) < 0):
            raise StructuralError("indptr must start at 0 and be nondecreasing")
        if indptr[-1] != len(indices) or len(indices) != len(data):
            raise StructuralError(
                f"row data length mismatch: indptr ends at {indptr[-1]}, "
                f"{len(indices)} indices, {len(data)} values"
            )
        if len(indices) and (indices.min() < 0 or indices.max() >= n):
            raise StructuralError(f"column index out of range for n={n}")
        return SparseRows(n, indptr, indices, data)

    arr = np.asarray(M, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise StructuralError(f"expected a non-empty square matrix, got shape {arr.shape}")
    n = arr.shape[0]
    rows, cols = np.nonzero(arr)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
    return SparseRows(n, indptr, cols.astype(np.int64), arr[rows, cols])


def validate(M, row_tol: float = ROW_TOL) -> ValidationReport:
    """Check a candidate matrix against the row-stochastic invariants.

    ``M`` may be a dense square array-like or any object exposing ``n``,
    ``indptr``, ``indices`` and ``data``. Structural problems raise
    :class:`StructuralError` before any numeric check runs; numeric
    problems are collected, every offending row listed.
    """
    S = _as_sparse(M)
    n, indptr, indices, data = S
    rows = _row_ids(indptr)
    found: list[Violation] = []

    bad = ~np.isfinite(data)
    found += [Violation(int(rows[k]), "non-finite", float(data[k])) for k in np.flatnonzero(bad)]
    clean = np.where(bad, 0.0, data)
    found += [Violation(int(rows[k]), "negative-weight", float(data[k]))
              for k in np.flatnonzero(clean < 0)]
    found += [Violation(int(rows[k]), "weight-above-one", float(data[k]))
              for k in np.flatnonzero(clean > 1)]

    if len(indices) > 1:
        same_row = rows[1:] == rows[:-1]
        step = np.diff(indices)
        for kind, mask in (("duplicate-entry", same_row & (step == 0)),
                           ("unsorted-columns", same_row & (step < 0))):
            found += [Violation(int(rows[k + 1]), kind, float(indices[k + 1]))
                      for k in np.flatnonzero(mask)]

    sums = np.bincount(rows, weights=clean, minlength=n)
    found += [Violation(int(i), "row-sum", float(sums[i]))
              for i in np.flatnonzero(np.abs(sums - 1.0) > row_tol)]

    found.sort(key=lambda v: v.row)
    return ValidationReport(tuple(found))


class RowStochasticMatrix:
    """Sparse ``n x n`` nonnegative matrix with unit row sums.

    Construction validates the candidate; rows that sum to 1 within
    ``row_tol`` are divided by their sum, explicit zeros are dropped.
    """

    def __init__(self, n, indptr, indices, data, row_tol: float = ROW_TOL):
        report = validate(SparseRows(n, indptr, indices, data), row_tol)
        if not report.ok:
            err = DomainError(f"matrix is not row-stochastic:\n{report}")
            err.report = report
            raise err
        S = _as_sparse(SparseRows(n, indptr, indices, data))
        rows = _row_ids(S.indptr)
        sums = np.bincount(rows, weights=S.data, minlength=S.n)
        values = S.data / sums[rows]
        keep = values != 0
        counts = np.bincount(rows[keep], minlength=S.n)
        new_indptr = np.zeros(S.n + 1, dtype=np.int64)
        np.cumsum(counts, out=new_indptr[1:])
        self.n = S.n
        self.indptr = _readonly(new_indptr)
        self.indices = _readonly(np.ascontiguousarray(S.indices[keep]))
        self.data = _readonly(np.ascontiguousarray(values[keep]))

    @classmethod
    def from_dense(cls, array, row_tol: float = ROW_TOL) -> "RowStochasticMatrix":
        return cls(*_as_sparse(array), row_tol=row_tol)

    @property
    def nnz(self) -> int:
        return len(self.data)

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return self.indices[lo:hi], self.data[lo:hi]

    @cached_property
    def row_ids(self) -> np.ndarray:
        return _readonly(_row_ids(self.indptr))

    @cached_property
    def diagonal(self) -> np.ndarray:
        """``w_ii`` for every node, zero where no self-loop is stored."""
        d = np.zeros(self.n)
        on_diag = self.indices == self.row_ids
        d[self.row_ids[on_diag]] = self.data[on_diag]
        return _readonly(d)

    @cached_property
    def transpose(self) -> SparseRows:
        """``W^T`` in compressed-row form, sources ascending within each row."""
        order = np.argsort(self.indices, kind="stable")
        counts = np.bincount(self.indices, minlength=self.n)
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        return SparseRows(
            self.n,
            _readonly(indptr),
            _readonly(np.ascontiguousarray(self.row_ids[order])),
            _readonly(np.ascontiguousarray(self.data[order])),
        )

    def toarray(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        out[self.row_ids, self.indices] = self.data
        return out

    def __eq__(self, other):
        if not isinstance(other, RowStochasticMatrix):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.data, other.data)
        )

    __hash__ = None

    def __repr__(self):
        return f"RowStochasticMatrix(n={self.n}, nnz={self.nnz})"


class DampingVector:
    """Per-node damping values, each within ``[eps, 1 - eps]``."""

    def __init__(self, values, eps: float = DEFAULT_EPS):
        a = np.array(values, dtype=np.float64).ravel()
        if len(a) < 1:
            raise StructuralError("damping vector must be non-empty")
        bad = np.flatnonzero(~((a >= eps) & (a <= 1 - eps)))
        if len(bad):
            i = int(bad[0])
            raise DomainError(
                f"damping a[{i}] = {a[i]!r} outside [{eps}, {1 - eps}] "
                f"({len(bad)} value(s) out of range)"
            )
        self.n = len(a)
        self.eps = eps
        self.values = _readonly(a)

    @classmethod
    def uniform(cls, n: int, alpha: float, eps: float = DEFAULT_EPS) -> "DampingVector":
        return cls(np.full(n, float(alpha)), eps)

    @property
    def max(self) -> float:
        return float(self.values.max())

    def __eq__(self, other):
        if not isinstance(other, DampingVector):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    __hash__ = None

    def __repr__(self):
        return f"DampingVector(n={self.n}, max={self.max:.6g})"


@dataclass(frozen=True)
class GeneralizedModel:
    W: RowStochasticMatrix
    A: DampingVector

    def __post_init__(self):
        if self.W.n != self.A.n:
            raise StructuralError(f"W has n={self.W.n} but A has n={self.A.n}")

    @property
    def n(self) -> int:
        return self.W.n

    @classmethod
    def coupled(cls, W: RowStochasticMatrix, eps: float = DEFAULT_EPS) -> "GeneralizedModel":
        return cls(W, couple_damping(W, eps))

    @classmethod
    def scalar(cls, W: RowStochasticMatrix, alpha: float) -> "GeneralizedModel":
        return cls(W, DampingVector.uniform(W.n, alpha, eps=min(DEFAULT_EPS, alpha, 1 - alpha)))


def couple_damping(W: RowStochasticMatrix, eps: float = DEFAULT_EPS) -> DampingVector:
    """Damping from termination mass: ``a_ii = clamp(1 - w_ii, eps, 1 - eps)``."""
    if not 0 < eps < 0.5:
        raise DomainError(f"eps must lie in (0, 0.5), got {eps!r}")
    return DampingVector(np.clip(1.0 - W.diagonal, eps, 1.0 - eps), eps)


def _edge_arrays(edges) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if isinstance(edges, tuple) and len(edges) == 3 and isinstance(edges[0], np.ndarray):
        src, tgt, w = edges
    else:
        triples = list(edges)
        if not triples:
            return (np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0))
        src, tgt, w = zip(*triples)
    src = np.asarray(src)
    tgt = np.asarray(tgt)
    for name, a in (("source", src), ("target", tgt)):
        if a.size and not np.issubdtype(a.dtype, np.integer):
            if not np.all(np.equal(np.mod(a, 1), 0)):
                raise StructuralError(f"{name} ids must be integers")
    return src.astype(np.int64), tgt.astype(np.int64), np.asarray(w, dtype=np.float64)


def _summed_edges(edges, n: int):
    """Canonical (row, col, weight) arrays with duplicates summed.

    Duplicates are added in ascending weight order, so the result does not
    depend on the order edges were supplied in.
    """
    if n < 1:
        raise StructuralError(f"node count must be positive, got {n}")
    src, tgt, w = _edge_arrays(edges)
    if len(src) and (min(src.min(), tgt.min()) < 0 or max(src.max(), tgt.max()) >= n):
        k = int(np.flatnonzero((src < 0) | (src >= n) | (tgt < 0) | (tgt >= n))[0])
        raise StructuralError(f"edge {k} ({src[k]} -> {tgt[k]}) out of range for n={n}")
    if not np.all(np.isfinite(w)):
        raise DomainError("edge weights must be finite")
    if np.any(w < 0):
        raise DomainError(f"edge weights must be nonnegative, got {w.min()!r}")
    order = np.lexsort((w, tgt, src))
    src, tgt, w = src[order], tgt[order], w[order]
    if len(src) == 0:
        return src, tgt, w
    first = np.ones(len(src), dtype=bool)
    first[1:] = (src[1:] != src[:-1]) | (tgt[1:] != tgt[:-1])
    starts = np.flatnonzero(first)
    return src[starts], tgt[starts], np.add.reduceat(w, starts)


def candidate_from_edges(edges, n: int) -> SparseRows:
    """Compressed rows exactly as written (duplicates summed, no normalization)."""
    src, tgt, w = _summed_edges(edges, n)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
    return SparseRows(n, indptr, tgt, w)


def from_edge_list(edges, n: int, dangling_policy: str = "self_sink") -> RowStochasticMatrix:
    """Build ``W`` by normalizing each node's outgoing weights.

    A node whose outgoing weights total zero becomes a self-loop
    (``self_sink``) or spreads uniformly over all nodes (``uniform``).
    """
    if dangling_policy not in DANGLING_POLICIES:
        raise DomainError(f"unknown dangling policy {dangling_policy!r}")
    src, tgt, w = _summed_edges(edges, n)
    keep = w > 0
    src, tgt, w = src[keep], tgt[keep], w[keep]
    totals = np.bincount(src, weights=w, minlength=n)
    w = w / totals[src]

    dangling = np.flatnonzero(totals == 0)
    if len(dangling):
        if dangling_policy == "self_sink":
            extra = (dangling, dangling, np.ones(len(dangling)))
        else:
            extra = (np.repeat(dangling, n), np.tile(np.arange(n), len(dangling)),
                     np.full(len(dangling) * n, 1.0 / n))
        src = np.concatenate([src, extra[0]])
        tgt = np.concatenate([tgt, extra[1]])
        w = np.concatenate([w, extra[2]])
        order = np.lexsort((tgt, src))
        src, tgt, w = src[order], tgt[order], w[order]

    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
    return RowStochasticMatrix(n, indptr, tgt, w)


def random_row_stochastic(
    n: int,
    out_degree: int = 10,
    seed: int = 0,
    diag_range: tuple[float, float] = (0.2, 0.9),
) -> RowStochasticMatrix:
    """Seeded sparse random ``W`` with a stored diagonal in ``diag_range``.

    Each row gets one self-loop weight drawn uniformly from ``diag_range``
    and ``out_degree`` off-diagonal targets (collisions merge) sharing the
    remaining mass with exponential weights.
    """
    rng = np.random.default_rng(seed)
    if n == 1:
        return RowStochasticMatrix(1, [0, 1], [0], [1.0])
    k = min(out_degree, n - 1)
    diag = rng.uniform(*diag_range, size=n)
    src = np.repeat(np.arange(n, dtype=np.int64), k)
    tgt = rng.integers(0, n - 1, size=n * k, dtype=np.int64)
    tgt += tgt >= src
    w = rng.exponential(size=n * k)
    totals = np.bincount(src, weights=w, minlength=n)
    w *= (1.0 - diag)[src] / totals[src]
    ar = np.arange(n, dtype=np.int64)
    edges = (np.concatenate([ar, src]), np.concatenate([ar, tgt]), np.concatenate([diag, w]))
    return from_edge_list(edges, n)


# -- text formats -----------------------------------------------------------

def _lines(source) -> Iterable[tuple[int, str]]:
    if isinstance(source, (str, PathLike)):
        with open(source, encoding="utf-8") as fh:
            yield from enumerate(fh.read().splitlines(), 1)
    else:
        yield from enumerate((line.rstrip("\n") for line in source), 1)


def read_edge_list(source) -> tuple[tuple[np.ndarray, np.ndarray, np.ndarray], int]:
    """Parse ``source<TAB>target<TAB>weight`` lines.

    Returns the edge arrays and the inferred node count (max id + 1).
    """
    src, tgt, w = [], [], []
    for lineno, raw in _lines(source):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t") if "\t" in line else line.split()
        if len(parts) != 3:
            raise StructuralError(f"line {lineno}: expected 3 fields, got {len(parts)}")
        try:
            src.append(int(parts[0]))
            tgt.append(int(parts[1]))
            w.append(float(parts[2]))
        except ValueError as exc:
            raise StructuralError(f"line {lineno}: {exc}") from None
    edges = (np.array(src, dtype=np.int64), np.array(tgt, dtype=np.int64), np.array(w))
    n = int(max(edges[0].max(), edges[1].max())) + 1 if src else 0
    return edges, n


def write_edge_list(W: RowStochasticMatrix, fh) -> None:
    for i, j, w in zip(W.row_ids.tolist(), W.indices.tolist(), W.data.tolist()):
        fh.write(f"{i}\t{j}\t{w:.17g}\n")


def read_damping(source, n: int, eps: float = DEFAULT_EPS) -> DampingVector:
    """Parse ``i<TAB>a`` lines; every node must appear exactly once."""
    a = np.full(n, np.nan)
    for lineno, raw in _lines(source):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise StructuralError(f"line {lineno}: expected 2 fields, got {len(parts)}")
        i = int(parts[0])
        if not 0 <= i < n:
            raise StructuralError(f"line {lineno}: node {i} out of range for n={n}")
        if not np.isnan(a[i]):
            raise StructuralError(f"line {lineno}: node {i} listed twice")
        a[i] = float(parts[1])
    missing = np.flatnonzero(np.isnan(a))
    if len(missing):
        raise StructuralError(f"damping missing for node {int(missing[0])}")
    return DampingVector(a, eps)


def write_damping(A: DampingVector, fh) -> None:
    for i, a in enumerate(A.values.tolist()):
        fh.write(f"{i}\t{a:.17g}\n")


__all__: Sequence[str] = [
    "DANGLING_POLICIES", "DEFAULT_EPS", "ROW_TOL", "DampingVector", "GeneralizedModel",
    "RowStochasticMatrix", "SparseRows", "ValidationReport", "Violation",
    "candidate_from_edges", "couple_damping", "from_edge_list", "random_row_stochastic",
    "read_damping", "read_edge_list", "validate", "write_damping", "write_edge_list",
]
