"""Command-line entry point: ``genrank <subcommand> ...``.

Exit status is 0 on success, 1 on domain or validation failures and 2 on
usage errors. Data goes to stdout (or ``--out``), diagnostics to stderr.
"""
from __future__ import annotations

import argparse
import contextlib
import json
import sys

import numpy as np

from . import graph, ingest, solver
from .errors import GenrankError
from .graph import DampingVector, GeneralizedModel
from .sim import SimConfig, simulate_sessions

CROSSCHECK_LIMIT = 1e-8


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="genrank", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def edges_args(sp):
        sp.add_argument("--edges", required=True, help="edge list: source<TAB>target<TAB>weight")
        sp.add_argument("--nodes", type=int, help="node count (default: max id + 1)")
        sp.add_argument("--dangling", choices=graph.DANGLING_POLICIES, default="self_sink")

    def damping_args(sp):
        g = sp.add_mutually_exclusive_group()
        g.add_argument("--alpha", type=float, help="scalar damping (classical PageRank)")
        g.add_argument("--coupled", action="store_true", help="a_ii = 1 - w_ii")
        g.add_argument("--damping", help="explicit per-node damping file: i<TAB>a")
        sp.add_argument("--eps", type=float, default=graph.DEFAULT_EPS)
        sp.add_argument("--tol", type=float, default=1e-12)
        sp.add_argument("--max-iters", type=int, default=10_000)

    r = sub.add_parser("rank", help="compute and rank centralities")
    edges_args(r)
    damping_args(r)
    r.add_argument("--solver", choices=("dense", "iterative"), default="iterative")
    r.add_argument("--mode", choices=solver.MODES, default="full_n")
    r.add_argument("--renormalize", action="store_true")
    r.add_argument("--format", choices=("tsv", "json", "table"), default="tsv")
    r.add_argument("--labels", help="display labels: id<TAB>label")
    r.add_argument("--out")

    e = sub.add_parser("estimate", help="estimate a model from visit logs or counts")
    e.add_argument("--log", action="append", default=[], help="visit log (repeatable)")
    e.add_argument("--counts", action="append", default=[], help="counts snapshot (repeatable)")
    e.add_argument("--nodes", type=int)
    e.add_argument("--zero-visit", choices=tuple(ingest.ZERO_VISIT_POLICIES), default="sink")
    e.add_argument("--eps", type=float, default=graph.DEFAULT_EPS)
    e.add_argument("--counts-out")
    e.add_argument("--model-out", help="estimated W as an edge list")
    e.add_argument("--damping-out", help="coupled damping as i<TAB>a")

    s = sub.add_parser("simulate", help="generate a visit log from W")
    edges_args(s)
    s.add_argument("--sessions", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--max-steps", type=int, default=10_000)
    s.add_argument("--start", help="start distribution: i<TAB>p")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--summary", action="store_true", help="print a summary line to stderr")
    s.add_argument("--out")

    d = sub.add_parser("drift", help="per-node drift between two counts snapshots")
    d.add_argument("--old", required=True)
    d.add_argument("--new", required=True)
    d.add_argument("--threshold", type=float, default=ingest.DEFAULT_DRIFT_THRESHOLD)
    d.add_argument("--out")

    v = sub.add_parser("validate", help="check that an edge list is already row-stochastic")
    v.add_argument("--edges", required=True)
    v.add_argument("--nodes", type=int)

    c = sub.add_parser("crosscheck", help="compare dense and iterative solver routes")
    edges_args(c)
    damping_args(c)
    return p


def _check_flags(p: argparse.ArgumentParser, args) -> None:
    cmd = args.command
    if cmd in ("rank", "crosscheck"):
        if args.alpha is not None and not 0 < args.alpha < 1:
            p.error("--alpha must lie in (0, 1)")
        if not 0 < args.eps < 0.5:
            p.error("--eps must lie in (0, 0.5)")
        if args.tol <= 0 or args.max_iters < 1:
            p.error("--tol must be positive and --max-iters at least 1")
    if cmd == "rank":
        if args.mode == "exclude_diagonal" and args.solver != "dense":
            p.error("--mode exclude_diagonal needs --solver dense")
        if args.renormalize and args.mode != "exclude_diagonal":
            p.error("--renormalize only applies to --mode exclude_diagonal")
    if cmd == "estimate" and not (args.log or args.counts):
        p.error("estimate needs at least one --log or --counts")
    if cmd == "simulate" and (args.sessions < 1 or args.max_steps < 1 or args.workers < 1):
        p.error("--sessions, --max-steps and --workers must be positive")
    if cmd == "simulate" and not 0 <= args.seed < 2 ** 64:
        p.error("--seed must be an unsigned 64-bit integer")
    if cmd == "drift" and not 0 < args.threshold <= 2:
        p.error("--threshold must lie in (0, 2]")


@contextlib.contextmanager
def _output(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            yield fh


def _load_w(args):
    edges, inferred = graph.read_edge_list(args.edges)
    n = args.nodes if args.nodes is not None else inferred
    return graph.from_edge_list(edges, n, args.dangling)


def _load_model(args, W) -> GeneralizedModel:
    if args.damping:
        return GeneralizedModel(W, graph.read_damping(args.damping, W.n, args.eps))
    if args.coupled:
        return GeneralizedModel.coupled(W, args.eps)
    return GeneralizedModel.scalar(W, 0.85 if args.alpha is None else args.alpha)


def _read_labels(path) -> dict[int, str]:
    labels = {}
    for lineno, raw in graph._lines(path):
        line = raw.rstrip("\r")
        if not line.strip() or line.startswith("#"):
            continue
        key, _, label = line.partition("\t")
        try:
            labels[int(key)] = label
        except ValueError:
            raise GenrankError(f"{path}: line {lineno}: bad node id {key!r}") from None
    return labels


def _solve(args, W):
    """Centrality for the rank command; scalar iterative runs use classical PageRank."""
    opts = solver.SolveOptions(args.tol, args.max_iters)
    model = _load_model(args, W)
    if args.solver == "dense":
        V = solver.total_effects_dense(model)
        return solver.centrality(V, args.mode, args.renormalize)
    if not (args.coupled or args.damping):
        return solver.classical_pagerank(W, float(model.A.values[0]), opts)
    return solver.generalized_centrality_iterative(model, opts)


def cmd_rank(args) -> int:
    W = _load_w(args)
    result = _solve(args, W)
    labels = _read_labels(args.labels) if args.labels else {}
    scores = result.scores.tolist()
    order = sorted(range(len(scores)), key=lambda j: (-scores[j], j))
    with _output(args.out) as fh:
        if args.format == "json":
            doc = {
                "n": result.n,
                "mode": result.mode,
                "scores": [{"id": j, "score": scores[j]} for j in order],
                "iterations": result.iterations,
                "residual": result.residual,
            }
            fh.write(json.dumps(doc, indent=2) + "\n")
        elif args.format == "table":
            width = max([len(lb) for lb in labels.values()] + [5])
            fh.write(f"{'rank':>5}  {'id':>8}  {'label':<{width}}  score\n")
            for pos, j in enumerate(order, 1):
                fh.write(f"{pos:>5}  {j:>8}  {labels.get(j, ''):<{width}}  {scores[j]:.6f}\n")
        else:
            for j in order:
                extra = f"\t{labels[j]}" if j in labels else ""
                fh.write(f"{j}\t{scores[j]:.17g}{extra}\n")
    return 0


def cmd_estimate(args) -> int:
    logs = [ingest.read_visit_log(path) for path in args.log]
    snapshots = [ingest.read_counts(path) for path in args.counts]
    n = args.nodes
    if n is None:
        n = max([ingest.log_node_count(lg) for lg in logs] + [c.n for c in snapshots])
    counts = None
    for part in [ingest.accumulate(lg, n) for lg in logs] + snapshots:
        counts = part if counts is None else counts + part
    model = ingest.estimate_model(counts, args.zero_visit, args.eps)
    if args.counts_out:
        with _output(args.counts_out) as fh:
            ingest.write_counts(counts, fh)
    if args.damping_out:
        with _output(args.damping_out) as fh:
            graph.write_damping(model.A, fh)
    if args.model_out or not (args.counts_out or args.damping_out):
        with _output(args.model_out) as fh:
            graph.write_edge_list(model.W, fh)
    return 0


def _read_start(path, n) -> np.ndarray:
    p = np.zeros(n)
    for lineno, raw in graph._lines(path):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        i, value = line.split()
        if not 0 <= int(i) < n:
            raise GenrankError(f"{path}: line {lineno}: node {i} out of range")
        p[int(i)] = float(value)
    return p


def cmd_simulate(args) -> int:
    W = _load_w(args)
    start = _read_start(args.start, W.n) if args.start else None
    cfg = SimConfig(args.sessions, args.seed, args.max_steps, start)
    log = simulate_sessions(W, cfg, workers=args.workers)
    with _output(args.out) as fh:
        ingest.write_visit_log(log, fh)
    if args.summary:
        print(f"sessions={len(log)}\tvisits={len(log.nodes)}\t"
              f"force_terminations={log.forced_terminations}", file=sys.stderr)
    return 0


def cmd_drift(args) -> int:
    report = ingest.row_drift(ingest.read_counts(args.old), ingest.read_counts(args.new),
                              args.threshold)
    with _output(args.out) as fh:
        for i, dist in enumerate(report.distances.tolist()):
            if report.insufficient[i]:
                fh.write(f"{i}\t-\tinsufficient\n")
            else:
                status = "flagged" if report.flagged[i] else "stable"
                fh.write(f"{i}\t{dist:.17g}\t{status}\n")
    return 0


def cmd_validate(args) -> int:
    edges, inferred = graph.read_edge_list(args.edges)
    n = args.nodes if args.nodes is not None else inferred
    report = graph.validate(graph.candidate_from_edges(edges, n))
    print(report)
    return 0 if report.ok else 1


def cmd_crosscheck(args) -> int:
    W = _load_w(args)
    model = _load_model(args, W)
    opts = solver.SolveOptions(args.tol, args.max_iters)
    dense = solver.centrality(solver.total_effects_dense(model)).scores
    if args.coupled or args.damping:
        iterative = solver.generalized_centrality_iterative(model, opts)
    else:
        iterative = solver.classical_pagerank(W, float(model.A.values[0]), opts)
    gap = float(np.abs(dense - iterative.scores).sum())
    print(f"max_l1_discrepancy\t{gap:.17g}")
    if gap > CROSSCHECK_LIMIT:
        print(f"routes disagree: {gap:.3e} > {CROSSCHECK_LIMIT:g}", file=sys.stderr)
        return 1
    return 0


COMMANDS = {
    "rank": cmd_rank,
    "estimate": cmd_estimate,
    "simulate": cmd_simulate,
    "drift": cmd_drift,
    "validate": cmd_validate,
    "crosscheck": cmd_crosscheck,
}


def main(argv=None) -> int:
    p = _parser()
    try:
        args = p.parse_args(argv)
        _check_flags(p, args)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except (GenrankError, OSError, ValueError) as exc:
        print(f"genrank {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
