"""Estimate model inputs from visitation logs.

A session is the ordered list of pages one visitor saw; it ends at its last
page. Per node we count visits, terminations and outgoing transitions.
These counts are additive across log batches, so estimates can be
refreshed node by node as new batches arrive.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, StructuralError
from .graph import (DEFAULT_EPS, GeneralizedModel, _lines, _readonly, couple_damping,
                    from_edge_list)

ZERO_VISIT_POLICIES = {"sink": "self_sink", "uniform": "uniform"}
DEFAULT_DRIFT_THRESHOLD = 0.1


class VisitLog:
    """Sessions stored back to back: ``nodes[offsets[s]:offsets[s + 1]]``."""

    def __init__(self, nodes, offsets, forced_terminations: int = 0):
        nodes = np.asarray(nodes, dtype=np.int64)
        offsets = np.asarray(offsets, dtype=np.int64)
        if offsets.ndim != 1 or len(offsets) < 1 or offsets[0] != 0 or offsets[-1] != len(nodes):
            raise StructuralError("session offsets must run from 0 to the number of visits")
        if np.any(np.diff(offsets) < 1):
            s = int(np.flatnonzero(np.diff(offsets) < 1)[0])
            raise StructuralError(f"session {s} is empty")
        if len(nodes) and nodes.min() < 0:
            raise StructuralError("node ids must be nonnegative")
        self.nodes = _readonly(nodes)
        self.offsets = _readonly(offsets)
        self.forced_terminations = int(forced_terminations)

    @classmethod
    def from_sessions(cls, sessions: Iterable[Sequence[int]]) -> "VisitLog":
        sessions = [list(s) for s in sessions]
        offsets = np.zeros(len(sessions) + 1, dtype=np.int64)
        np.cumsum([len(s) for s in sessions], out=offsets[1:])
        nodes = np.fromiter((v for s in sessions for v in s), dtype=np.int64, count=offsets[-1])
        return cls(nodes, offsets)

    def __len__(self) -> int:
        return len(self.offsets) - 1

    def __iter__(self):
        for s in range(len(self)):
            yield self.nodes[self.offsets[s]:self.offsets[s + 1]]

    def session_lengths(self) -> np.ndarray:
        return np.diff(self.offsets)

    def __eq__(self, other):
        if not isinstance(other, VisitLog):
            return NotImplemented
        return (np.array_equal(self.nodes, other.nodes)
                and np.array_equal(self.offsets, other.offsets)
                and self.forced_terminations == other.forced_terminations)

    __hash__ = None

    def __repr__(self):
        return f"VisitLog(sessions={len(self)}, visits={len(self.nodes)})"


class VisitCounts:
    """Per-node visit, termination and transition tallies.

    Transitions are kept in compressed rows (``t_indptr``, ``t_indices``,
    ``t_counts``). For every node ``terminations + sum(transitions) == visits``.
    """

    def __init__(self, n, visits, terminations, t_indptr, t_indices, t_counts):
        self.n = int(n)
        self.visits = _readonly(np.asarray(visits, dtype=np.int64))
        self.terminations = _readonly(np.asarray(terminations, dtype=np.int64))
        self.t_indptr = _readonly(np.asarray(t_indptr, dtype=np.int64))
        self.t_indices = _readonly(np.asarray(t_indices, dtype=np.int64))
        self.t_counts = _readonly(np.asarray(t_counts, dtype=np.int64))
        if (len(self.visits) != self.n or len(self.terminations) != self.n
                or len(self.t_indptr) != self.n + 1
                or len(self.t_indices) != len(self.t_counts)
                or self.t_indptr[-1] != len(self.t_counts)):
            raise StructuralError("visit count arrays do not match n")
        if len(self.t_indices) and (self.t_indices.min() < 0 or self.t_indices.max() >= self.n):
            raise StructuralError("transition target out of range")
        if min(self.visits.min(initial=0), self.terminations.min(initial=0),
               self.t_counts.min(initial=0)) < 0:
            raise DomainError("counts must be nonnegative")
        out = np.bincount(self.sources, weights=self.t_counts, minlength=self.n)
        bad = np.flatnonzero(self.terminations + out.astype(np.int64) != self.visits)
        if len(bad):
            i = int(bad[0])
            raise DomainError(
                f"node {i}: terminations {self.terminations[i]} + transitions "
                f"{int(out[i])} != visits {self.visits[i]}"
            )

    @classmethod
    def from_triples(cls, n, visits, terminations, src, tgt, count) -> "VisitCounts":
        src, tgt, count = (np.asarray(a, dtype=np.int64) for a in (src, tgt, count))
        if len(src) and (min(src.min(), tgt.min()) < 0 or max(src.max(), tgt.max()) >= n):
            raise StructuralError(f"transition endpoint out of range for n={n}")
        keys = src * n + tgt
        uniq, inverse = np.unique(keys, return_inverse=True)
        summed = np.bincount(inverse, weights=count, minlength=len(uniq)).astype(np.int64)
        keep = summed != 0
        uniq, summed = uniq[keep], summed[keep]
        rows = uniq // n if n else uniq
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
        return cls(n, visits, terminations, indptr, uniq % n if n else uniq, summed)

    @property
    def sources(self) -> np.ndarray:
        return np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.t_indptr))

    def transitions(self) -> dict[tuple[int, int], int]:
        return {(i, j): c for i, j, c in zip(self.sources.tolist(), self.t_indices.tolist(),
                                               self.t_counts.tolist())}

    def __add__(self, other: "VisitCounts") -> "VisitCounts":
        if not isinstance(other, VisitCounts):
            return NotImplemented
        if other.n != self.n:
            raise StructuralError(f"cannot merge counts with n={self.n} and n={other.n}")
        return VisitCounts.from_triples(
            self.n,
            self.visits + other.visits,
            self.terminations + other.terminations,
            np.concatenate([self.sources, other.sources]),
            np.concatenate([self.t_indices, other.t_indices]),
            np.concatenate([self.t_counts, other.t_counts]),
        )

    def __eq__(self, other):
        if not isinstance(other, VisitCounts):
            return NotImplemented
        return self.n == other.n and all(
            np.array_equal(getattr(self, k), getattr(other, k))
            for k in ("visits", "terminations", "t_indptr", "t_indices", "t_counts")
        )

    __hash__ = None

    def __repr__(self):
        return f"VisitCounts(n={self.n}, visits={int(self.visits.sum())})"


@dataclass(frozen=True, eq=False)
class DriftReport:
    """Per-node L1 distance between two estimated rows.

    ``distances`` is NaN where either snapshot has no visits for the node;
    those rows are marked ``insufficient`` and never flagged.
    """

    distances: np.ndarray
    insufficient: np.ndarray
    flagged: np.ndarray
    threshold: float

    @property
    def flagged_rows(self) -> list[int]:
        return np.flatnonzero(self.flagged).tolist()


def accumulate(log: VisitLog, n: int) -> VisitCounts:
    """Count visits, terminations and consecutive-pair transitions."""
    nodes, offsets = log.nodes, log.offsets
    if len(nodes) and nodes.max() >= n:
        pos = int(np.flatnonzero(nodes >= n)[0])
        s = int(np.searchsorted(offsets, pos, side="right") - 1)
        raise StructuralError(f"session {s}: node {int(nodes[pos])} out of range for n={n}")
    visits = np.bincount(nodes, minlength=n)
    terminations = np.bincount(nodes[offsets[1:] - 1], minlength=n)
    step = np.ones(max(len(nodes) - 1, 0), dtype=bool)
    step[offsets[1:-1] - 1] = False
    src, tgt = nodes[:-1][step], nodes[1:][step]
    return VisitCounts.from_triples(n, visits, terminations, src, tgt, np.ones(len(src)))


def estimate_rows(counts: VisitCounts):
    """Edge arrays of the estimated rows, self-transitions folded into the diagonal."""
    n = counts.n
    ar = np.arange(n, dtype=np.int64)
    src = np.concatenate([counts.sources, ar])
    tgt = np.concatenate([counts.t_indices, ar])
    w = np.concatenate([counts.t_counts, counts.terminations]).astype(np.float64)
    return src, tgt, w


def estimate_model(counts: VisitCounts, zero_visit_policy: str = "sink",
                   eps: float = DEFAULT_EPS) -> GeneralizedModel:
    """``w_ij = transitions_ij / visits_i`` and ``w_ii = (terminations_i + transitions_ii) / visits_i``.

    Damping then follows the coupling ``a_ii = 1 - w_ii``.
    """
    if zero_visit_policy not in ZERO_VISIT_POLICIES:
        raise DomainError(f"unknown zero-visit policy {zero_visit_policy!r}")
    W = from_edge_list(estimate_rows(counts), counts.n, ZERO_VISIT_POLICIES[zero_visit_policy])
    return GeneralizedModel(W, couple_damping(W, eps))


def row_drift(old: VisitCounts, new: VisitCounts,
              threshold: float = DEFAULT_DRIFT_THRESHOLD) -> DriftReport:
    if old.n != new.n:
        raise StructuralError(f"snapshots disagree on n: {old.n} vs {new.n}")
    if not 0 < threshold <= 2:
        raise DomainError(f"threshold must lie in (0, 2], got {threshold!r}")
    n = old.n
    parts = []
    for counts, sign in ((old, 1.0), (new, -1.0)):
        src, tgt, w = estimate_rows(counts)
        denom = np.maximum(counts.visits, 1)[src]
        parts.append((src, tgt, sign * w / denom))
    src = np.concatenate([p[0] for p in parts])
    tgt = np.concatenate([p[1] for p in parts])
    diff = np.concatenate([p[2] for p in parts])
    uniq, inverse = np.unique(src * n + tgt, return_inverse=True)
    net = np.bincount(inverse, weights=diff, minlength=len(uniq))
    dist = np.bincount(uniq // n, weights=np.abs(net), minlength=n)
    insufficient = (old.visits == 0) | (new.visits == 0)
    dist = np.minimum(dist, 2.0)
    dist[insufficient] = np.nan
    flagged = ~insufficient & (dist > threshold)
    return DriftReport(dist, insufficient, flagged, float(threshold))


# -- text formats -----------------------------------------------------------

def read_visit_log(source) -> VisitLog:
    """One session per line, comma-separated node ids; ``#`` and blank lines skipped."""
    sessions = []
    for lineno, raw in _lines(source):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            sessions.append([int(tok) for tok in line.split(",")])
        except ValueError as exc:
            raise StructuralError(f"line {lineno}: {exc}") from None
        if min(sessions[-1]) < 0:
            raise StructuralError(f"line {lineno}: negative node id")
    return VisitLog.from_sessions(sessions)


def log_node_count(log: VisitLog) -> int:
    return int(log.nodes.max()) + 1 if len(log.nodes) else 0


def write_visit_log(log: VisitLog, fh) -> None:
    nodes = log.nodes.tolist()
    offsets = log.offsets.tolist()
    for s in range(len(log)):
        fh.write(",".join(map(str, nodes[offsets[s]:offsets[s + 1]])))
        fh.write("\n")


def write_counts(counts: VisitCounts, fh) -> None:
    """Node block, one blank line, then the transition block."""
    fh.write("# node\tvisits\tterminations\n")
    for i, (v, t) in enumerate(zip(counts.visits.tolist(), counts.terminations.tolist())):
        fh.write(f"{i}\t{v}\t{t}\n")
    fh.write("\n# source\ttarget\tcount\n")
    for i, j, c in zip(counts.sources.tolist(), counts.t_indices.tolist(),
                       counts.t_counts.tolist()):
        fh.write(f"{i}\t{j}\t{c}\n")


def read_counts(source) -> VisitCounts:
    node_rows, trans_rows = [], []
    block = node_rows
    for lineno, raw in _lines(source):
        line = raw.strip()
        if not line:
            if node_rows:
                block = trans_rows
            continue
        if line.startswith("#"):
            continue
        try:
            fields = [int(tok) for tok in line.split()]
        except ValueError as exc:
            raise StructuralError(f"line {lineno}: {exc}") from None
        if len(fields) != 3:
            raise StructuralError(f"line {lineno}: expected 3 fields, got {len(fields)}")
        if block is node_rows and fields[0] != len(node_rows):
            raise StructuralError(f"line {lineno}: expected node {len(node_rows)}, got {fields[0]}")
        block.append(fields)
    if not node_rows:
        raise StructuralError("counts file has no node block")
    nodes = np.array(node_rows, dtype=np.int64)
    trans = np.array(trans_rows, dtype=np.int64).reshape(-1, 3)
    return VisitCounts.from_triples(len(nodes), nodes[:, 1], nodes[:, 2],
                                    trans[:, 0], trans[:, 1], trans[:, 2])
