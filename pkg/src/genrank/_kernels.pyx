# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels for the fixed-point solve and the surfer simulation.

Mirrors ``_fallback.py`` operation for operation; both backends must stay
bit-identical.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs
from libc.stdint cimport int64_t, uint64_t
from libc.stdlib cimport free, malloc, realloc

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double TO_UNIT = 1.0 / 9007199254740992.0  # 2**-53


def fixed_point(const int64_t[::1] t_indptr, const int64_t[::1] t_indices,
                const double[::1] t_data, scale, double c0, double tol,
                Py_ssize_t max_iters):
    cdef Py_ssize_t n = t_indptr.shape[0] - 1
    s_arr = np.ascontiguousarray(np.broadcast_to(np.asarray(scale, dtype=np.float64), (n,)))
    a_arr = np.full(n, c0)
    b_arr = np.empty(n)
    z_arr = np.empty(n)
    cdef const double[::1] s = s_arr
    cdef double[::1] a_mv = a_arr, b_mv = b_arr, z_mv = z_arr
    cdef double *x = &a_mv[0]
    cdef double *new = &b_mv[0]
    cdef double *z = &z_mv[0]
    cdef double *tmp
    cdef double acc, residual = float("inf")
    cdef Py_ssize_t it = 0, j, k
    with nogil:
        while it < max_iters:
            it += 1
            for j in range(n):
                z[j] = s[j] * x[j]
            for j in range(n):
                acc = 0.0
                for k in range(t_indptr[j], t_indptr[j + 1]):
                    acc = acc + t_data[k] * z[t_indices[k]]
                new[j] = acc + c0
            residual = 0.0
            for j in range(n):
                residual = residual + fabs(new[j] - x[j])
            tmp = x
            x = new
            new = tmp
            if residual <= tol:
                break
    out = a_arr if x == &a_mv[0] else b_arr
    return out, it, residual


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline Py_ssize_t upper_bound(const double[::1] a, double u,
                                   Py_ssize_t lo, Py_ssize_t hi) noexcept nogil:
    # first index in [lo, hi) with a[k] > u, or hi
    cdef Py_ssize_t mid
    while lo < hi:
        mid = (lo + hi) // 2
        if u < a[mid]:
            hi = mid
        else:
            lo = mid + 1
    return lo


cdef struct Buffer:
    int64_t *data
    Py_ssize_t size
    Py_ssize_t cap


cdef inline int push(Buffer *b, int64_t v) noexcept nogil:
    cdef int64_t *grown
    if b.size == b.cap:
        grown = <int64_t *> realloc(b.data, 2 * b.cap * sizeof(int64_t))
        if grown == NULL:
            return -1
        b.data = grown
        b.cap *= 2
    b.data[b.size] = v
    b.size += 1
    return 0


def simulate_chunk(const int64_t[::1] indptr, const int64_t[::1] indices,
                   const double[::1] cum, start_cum, uint64_t seed,
                   Py_ssize_t first, Py_ssize_t count, Py_ssize_t max_steps):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef bint uniform_start = start_cum is None
    cdef const double[::1] start = cum if uniform_start else start_cum
    lengths_arr = np.empty(count, dtype=np.int64)
    cdef int64_t[::1] lengths = lengths_arr
    cdef Buffer buf
    cdef Py_ssize_t s, length, i, j, k, lo, hi, forced = 0
    cdef uint64_t state
    cdef double u
    cdef int failed = 0
    buf.cap = count * 4 + 16
    buf.size = 0
    buf.data = <int64_t *> malloc(buf.cap * sizeof(int64_t))
    if buf.data == NULL:
        raise MemoryError()
    try:
        with nogil:
            for s in range(count):
                state = mix64(seed ^ mix64(<uint64_t> (first + s + 1) * GOLDEN))
                state = state + GOLDEN
                u = (mix64(state) >> 11) * TO_UNIT
                if uniform_start:
                    i = <Py_ssize_t> (u * n)
                else:
                    i = upper_bound(start, u, 0, n)
                if i > n - 1:
                    i = n - 1
                if push(&buf, i):
                    failed = 1
                    break
                length = 1
                while True:
                    if length >= max_steps:
                        forced += 1
                        break
                    state = state + GOLDEN
                    u = (mix64(state) >> 11) * TO_UNIT
                    lo = indptr[i]
                    hi = indptr[i + 1]
                    k = upper_bound(cum, u, lo, hi)
                    if k > hi - 1:
                        k = hi - 1
                    j = indices[k]
                    if j == i:
                        break
                    if push(&buf, j):
                        failed = 1
                        break
                    length += 1
                    i = j
                if failed:
                    break
                lengths[s] = length
        if failed:
            raise MemoryError()
        nodes = np.empty(buf.size, dtype=np.int64)
        if buf.size:
            nodes[:] = <int64_t[:buf.size]> buf.data
    finally:
        free(buf.data)
    return nodes, lengths_arr, forced
