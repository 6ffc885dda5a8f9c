# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops for history-weight computation.

Each function mirrors a sibling in ``crm._fallback``. Sums run in plain
sequential order, so results are reproducible bit-for-bit for a given build.
"""

import numpy as np

from libc.math cimport exp


def sqexp_weights(const double[:, ::1] windows, const double[::1] target,
                  double bandwidth, double width, double norm):
    """norm * exp(-||(target - window_i) / bandwidth||^2 / (2 width^2))."""
    cdef Py_ssize_t n = windows.shape[0]
    cdef Py_ssize_t p = windows.shape[1]
    cdef Py_ssize_t i, j
    cdef double s, u
    cdef double inv = 1.0 / (2.0 * width * width * bandwidth * bandwidth)
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    for i in range(n):
        s = 0.0
        for j in range(p):
            u = target[j] - windows[i, j]
            s += u * u
        o[i] = norm * exp(-s * inv)
    return out


def epanechnikov_weights(const double[:, ::1] windows, const double[::1] target,
                         double bandwidth, double width):
    """Product-Epanechnikov: prod_j 3/(4w) * (1 - (u_j/w)^2)_+ at u = (t - x)/b."""
    cdef Py_ssize_t n = windows.shape[0]
    cdef Py_ssize_t p = windows.shape[1]
    cdef Py_ssize_t i, j
    cdef double u, v, acc
    cdef double c = 0.75 / width
    cdef double invb = 1.0 / bandwidth
    cdef double invw = 1.0 / width
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    for i in range(n):
        acc = 1.0
        for j in range(p):
            u = (target[j] - windows[i, j]) * invb * invw
            v = 1.0 - u * u
            if v <= 0.0:
                acc = 0.0
                break
            acc *= c * v
        o[i] = acc
    return out


def stratified_weights(const double[:, :, ::1] xs, const double[:, ::1] ys,
                       const double[:, ::1] tx, const double[::1] ty, double inv_w2):
    """Stratified set similarity between each labeled window and the target.

    xs: (n, d, q) window inputs, ys: (n, d) labels in {-1,+1},
    tx: (d, q) target inputs, ty: (d,) target labels.
    A stratum term contributes only when populated in both histories.
    """
    cdef Py_ssize_t n = xs.shape[0]
    cdef Py_ssize_t d = xs.shape[1]
    cdef Py_ssize_t q = xs.shape[2]
    cdef Py_ssize_t i, a, b, c
    cdef double s_pos, s_neg, dist, u, w
    cdef long n_pos, n_neg, t_pos, t_neg

    t_pos = 0
    t_neg = 0
    for a in range(d):
        if ty[a] > 0:
            t_pos += 1
        else:
            t_neg += 1

    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    for i in range(n):
        n_pos = 0
        n_neg = 0
        for a in range(d):
            if ys[i, a] > 0:
                n_pos += 1
            else:
                n_neg += 1
        s_pos = 0.0
        s_neg = 0.0
        for a in range(d):
            for b in range(d):
                if (ys[i, a] > 0) != (ty[b] > 0):
                    continue
                dist = 0.0
                for c in range(q):
                    u = xs[i, a, c] - tx[b, c]
                    dist += u * u
                if ys[i, a] > 0:
                    s_pos += exp(-dist * inv_w2)
                else:
                    s_neg += exp(-dist * inv_w2)
        w = 0.0
        if n_pos > 0 and t_pos > 0:
            w += s_pos / (2.0 * n_pos * t_pos)
        if n_neg > 0 and t_neg > 0:
            w += s_neg / (2.0 * n_neg * t_neg)
        o[i] = w
    return out
