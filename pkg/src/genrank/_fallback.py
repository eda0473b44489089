"""Numpy / pure-Python kernels, used when the compiled extension is missing.

Arithmetic order matches ``_kernels.pyx`` step for step so both backends
return bit-identical results.
"""
from bisect import bisect_right

import numpy as np

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
TO_UNIT = 2.0 ** -53


def fixed_point(t_indptr, t_indices, t_data, scale, const, tol, max_iters):
    """Iterate ``x <- const + W^T (scale * x)`` from ``x = const``.

    ``t_*`` hold ``W^T`` in compressed rows. Returns ``(x, iterations,
    residual)`` where ``residual`` is the L1 change of the last step.
    """
    n = len(t_indptr) - 1
    rows = np.repeat(np.arange(n, dtype=np.int64), np.diff(t_indptr))
    x = np.full(n, const)
    residual = np.inf
    it = 0
    while it < max_iters:
        it += 1
        z = scale * x
        new = np.bincount(rows, weights=t_data * z[t_indices], minlength=n) + const
        residual = float(np.cumsum(np.abs(new - x))[-1])
        x = new
        if residual <= tol:
            break
    return x, it, residual


def mix64(z):
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


def session_state(seed, index):
    return mix64(seed ^ mix64(((index + 1) * GOLDEN) & MASK))


def simulate_chunk(indptr, indices, cum, start_cum, seed, first, count, max_steps):
    """Simulate sessions ``first .. first + count - 1``.

    ``cum`` holds per-row cumulative weights normalized to end at 1.0;
    ``start_cum`` is the same for the start distribution, or ``None`` for
    uniform starts. Returns ``(nodes, lengths, forced)``.
    """
    n = len(indptr) - 1
    indptr = indptr.tolist()
    indices = indices.tolist()
    cum = cum.tolist()
    start = None if start_cum is None else start_cum.tolist()
    nodes, lengths, forced = [], [], 0
    for s in range(first, first + count):
        state = session_state(seed, s)
        state = (state + GOLDEN) & MASK
        u = (mix64(state) >> 11) * TO_UNIT
        if start is None:
            i = min(int(u * n), n - 1)
        else:
            i = min(bisect_right(start, u), n - 1)
        nodes.append(i)
        length = 1
        while True:
            if length >= max_steps:
                forced += 1
                break
            state = (state + GOLDEN) & MASK
            u = (mix64(state) >> 11) * TO_UNIT
            lo, hi = indptr[i], indptr[i + 1]
            k = min(bisect_right(cum, u, lo, hi), hi - 1)
            j = indices[k]
            if j == i:
                break
            nodes.append(j)
            length += 1
            i = j
        lengths.append(length)
    return np.array(nodes, dtype=np.int64), np.array(lengths, dtype=np.int64), forced
