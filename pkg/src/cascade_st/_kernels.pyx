# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops. Must stay behaviourally identical to ``_kernels_py``."""

from libc.math cimport sqrt, log10, INFINITY
from libc.stdlib cimport malloc, free


def edit_ops(ref, hyp):
    """Return ``(substitutions, insertions, deletions)`` turning ``ref`` into ``hyp``.

    Both arguments are sequences of ints. Backtrace prefers the diagonal
    (match/substitution), then insertion, then deletion.
    """
    cdef Py_ssize_t n = len(ref), m = len(hyp)
    cdef Py_ssize_t i, j, w = m + 1
    cdef int *a = <int *> malloc((n + 1) * sizeof(int))
    cdef int *b = <int *> malloc((m + 1) * sizeof(int))
    cdef int *d = <int *> malloc((n + 1) * (m + 1) * sizeof(int))
    cdef int cost, best, sub_c, ins_c, del_c
    cdef int s = 0, ins = 0, dels = 0
    if a == NULL or b == NULL or d == NULL:
        free(a); free(b); free(d)
        raise MemoryError()
    try:
        for i in range(n):
            a[i] = ref[i]
        for j in range(m):
            b[j] = hyp[j]
        for j in range(m + 1):
            d[j] = <int> j
        for i in range(1, n + 1):
            d[i * w] = <int> i
            for j in range(1, m + 1):
                cost = 0 if a[i - 1] == b[j - 1] else 1
                sub_c = d[(i - 1) * w + j - 1] + cost
                ins_c = d[i * w + j - 1] + 1
                del_c = d[(i - 1) * w + j] + 1
                best = sub_c
                if ins_c < best:
                    best = ins_c
                if del_c < best:
                    best = del_c
                d[i * w + j] = best
        i = n
        j = m
        while i > 0 or j > 0:
            if i > 0 and j > 0:
                cost = 0 if a[i - 1] == b[j - 1] else 1
                if d[i * w + j] == d[(i - 1) * w + j - 1] + cost:
                    s += cost
                    i -= 1
                    j -= 1
                    continue
            if j > 0 and d[i * w + j] == d[i * w + j - 1] + 1:
                ins += 1
                j -= 1
            else:
                dels += 1
                i -= 1
    finally:
        free(a)
        free(b)
        free(d)
    return s, ins, dels


def rms_dbfs(const double[::1] samples):
    """RMS level in dBFS; ``-inf`` for an all-zero or empty buffer."""
    cdef Py_ssize_t k, n = samples.shape[0]
    cdef double acc = 0.0, x
    if n == 0:
        return -INFINITY
    for k in range(n):
        x = samples[k]
        acc += x * x
    if acc == 0.0:
        return -INFINITY
    return 20.0 * log10(sqrt(acc / n))
