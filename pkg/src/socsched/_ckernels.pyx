# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot loops in :mod:`socsched._kernels_py`."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def insertion_start(list intervals, long long earliest, long long duration):
    cdef long long t = earliest
    cdef long long s, f
    for iv in intervals:
        s = iv[0]
        f = iv[1]
        if t + duration <= s:
            return t
        if f > t:
            t = f
    return t


def span_returns(rewards, starts, ends, double gamma):
    cdef double[::1] r = np.ascontiguousarray(rewards, dtype=np.float64)
    cdef long long[::1] s = np.ascontiguousarray(starts, dtype=np.int64)
    cdef long long[::1] e = np.ascontiguousarray(ends, dtype=np.int64)
    cdef Py_ssize_t n = s.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] g = out
    cdef Py_ssize_t i, k
    cdef double acc, w
    for i in range(n):
        acc = 0.0
        w = 1.0
        for k in range(s[i], e[i] + 1):
            acc += w * r[k]
            w *= gamma
        g[i] = acc
    return out


def horizon_returns(rewards, starts, double gamma):
    cdef double[::1] r = np.ascontiguousarray(rewards, dtype=np.float64)
    cdef long long[::1] s = np.ascontiguousarray(starts, dtype=np.int64)
    cdef Py_ssize_t H = r.shape[0]
    cdef Py_ssize_t n = s.shape[0]
    suffix_arr = np.empty(H + 1, dtype=np.float64)
    cdef double[::1] suffix = suffix_arr
    cdef Py_ssize_t k, i
    cdef double acc = 0.0
    suffix[H] = 0.0
    for k in range(H - 1, -1, -1):
        acc = r[k] + gamma * acc
        suffix[k] = acc
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] g = out
    for i in range(n):
        g[i] = suffix[s[i]]
    return out
