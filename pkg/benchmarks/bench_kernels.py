"""Time the compiled kernels against the numpy / pure-Python fallback.

    python benchmarks/bench_kernels.py --nodes 200000 --sessions 50000
"""
import argparse
import time

import numpy as np

from genrank import _backend, _fallback
from genrank.graph import GeneralizedModel, random_row_stochastic
from genrank.sim import SimConfig, simulate_sessions


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nodes", type=int, default=200_000)
    ap.add_argument("--degree", type=int, default=9)
    ap.add_argument("--iters", type=int, default=50, help="fixed-point iterations to time")
    ap.add_argument("--sessions", type=int, default=50_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    compiled = _backend.compiled()
    backends = [("python", _fallback)] + ([("cython", compiled)] if compiled else [])
    if compiled is None:
        print("compiled kernels not built; timing the fallback only")

    W = random_row_stochastic(args.nodes, args.degree, seed=1)
    model = GeneralizedModel.coupled(W)
    T = W.transpose
    print(f"fixed point: n={W.n} nnz={W.nnz}, {args.iters} iterations")
    results = {}
    for name, k in backends:
        secs, out = best_of(lambda: k.fixed_point(T.indptr, T.indices, T.data, model.A.values,
                                                  1.0 / W.n, 0.0, args.iters), args.repeat)
        results[name] = out[0]
        print(f"  {name:7s} {secs:8.3f}s  {secs / args.iters * 1e3:8.2f} ms/iter")
    if len(results) == 2:
        print(f"  bit-identical: {np.array_equal(results['python'], results['cython'])}")

    Ws = random_row_stochastic(1000, 8, seed=2, diag_range=(0.1, 0.5))
    cfg = SimConfig(args.sessions, seed=3)
    print(f"simulation: {args.sessions} sessions on n={Ws.n}")
    logs = {}
    for name, k in backends:
        secs, log = best_of(lambda: simulate_sessions(Ws, cfg, backend=k), args.repeat)
        logs[name] = log
        print(f"  {name:7s} {secs:8.3f}s  {len(log.nodes) / secs / 1e6:8.2f} M visits/s")
    if len(logs) == 2:
        print(f"  identical logs: {logs['python'] == logs['cython']}")


if __name__ == "__main__":
    main()
