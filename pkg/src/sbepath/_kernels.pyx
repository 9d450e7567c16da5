# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels; see ``_fallback`` for the reference semantics."""

import numpy as np


def best_partition(weights):
    cdef const double[:, ::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t n = w.shape[0]
    best_arr = np.zeros(n)
    prev_arr = np.full(n, -1, dtype=np.int64)
    cdef double[::1] best = best_arr
    cdef long long[::1] prev = prev_arr
    cdef Py_ssize_t i, j, arg
    cdef double top, cand
    for j in range(1, n):
        top = best[0] + w[0, j]
        arg = 0
        for i in range(1, j):
            cand = best[i] + w[i, j]
            if cand > top:
                top = cand
                arg = i
        best[j] = top
        prev[j] = arg
    return best_arr, prev_arr


cdef inline Py_ssize_t _lower(const double[::1] a, double x) nogil:
    # first index with a[i] >= x
    cdef Py_ssize_t lo = 0, hi = a.shape[0], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if a[mid] < x:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef inline Py_ssize_t _upper(const double[::1] a, double x) nogil:
    # first index with a[i] > x
    cdef Py_ssize_t lo = 0, hi = a.shape[0], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if a[mid] <= x:
            lo = mid + 1
        else:
            hi = mid
    return lo


def ball_mass_sorted(positions, cumulative, centers, radii):
    cdef const double[::1] pos = np.ascontiguousarray(positions, dtype=np.float64)
    cdef const double[::1] cum = np.ascontiguousarray(cumulative, dtype=np.float64)
    cdef const double[::1] y = np.ascontiguousarray(centers, dtype=np.float64).ravel()
    cdef const double[::1] r = np.ascontiguousarray(radii, dtype=np.float64)
    cdef Py_ssize_t n_c = y.shape[0], n_r = r.shape[0], i, j
    out_arr = np.empty((n_c, n_r))
    cdef double[:, ::1] out = out_arr
    with nogil:
        for i in range(n_c):
            for j in range(n_r):
                out[i, j] = cum[_upper(pos, y[i] + r[j])] - cum[_lower(pos, y[i] - r[j])]
    return out_arr


def ball_mass_hist(atoms, weights, centers, radii):
    cdef const double[:, ::1] a = np.ascontiguousarray(atoms, dtype=np.float64)
    cdef const double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef const double[:, ::1] c = np.ascontiguousarray(centers, dtype=np.float64)
    r_arr = np.ascontiguousarray(radii, dtype=np.float64)
    cdef const double[::1] r2 = r_arr * r_arr
    cdef Py_ssize_t n_c = c.shape[0], n_r = r2.shape[0], m = a.shape[0], d = a.shape[1]
    cdef Py_ssize_t i, j, k, b
    cdef double dist2, diff, acc
    out_arr = np.zeros((n_c, n_r))
    cdef double[:, ::1] out = out_arr
    hist_arr = np.zeros(n_r + 1)
    cdef double[::1] hist = hist_arr
    with nogil:
        for i in range(n_c):
            for b in range(n_r + 1):
                hist[b] = 0.0
            for j in range(m):
                dist2 = 0.0
                for k in range(d):
                    diff = c[i, k] - a[j, k]
                    dist2 = dist2 + diff * diff
                hist[_lower(r2, dist2)] += w[j]
            acc = 0.0
            for b in range(n_r):
                acc = acc + hist[b]
                out[i, b] = acc
    return out_arr
