# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled split search. Mirrors _split_py.find_best_split exactly:
same accumulation order, same tie-breaking, same gain expression."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def find_best_split(
    double[:, ::1] X,
    double[:] g,
    double[:] h,
    double reg_lambda,
    double gamma,
    double min_child_hessian,
):
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t n_features = X.shape[1]
    cdef int best_feat = -1
    cdef double best_thr = 0.0
    cdef double best_gain = 0.0
    if n < 2:
        return best_feat, best_thr, best_gain

    cdef cnp.ndarray[double, ndim=1] col = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.intp_t, ndim=1] order
    cdef double[:] col_mv = col
    cdef cnp.intp_t[:] order_mv
    cdef Py_ssize_t i, j, k
    cdef double g_total, h_total, parent, gl, hl, gr, hr, gain, xcur, xnext

    for j in range(n_features):
        for i in range(n):
            col_mv[i] = X[i, j]
        order = np.argsort(col, kind="stable")
        order_mv = order
        if col_mv[order_mv[0]] == col_mv[order_mv[n - 1]]:
            continue
        # totals accumulated in sorted order, matching the fallback's cumsum
        g_total = 0.0
        h_total = 0.0
        for i in range(n):
            k = order_mv[i]
            g_total = g_total + g[k]
            h_total = h_total + h[k]
        parent = g_total * g_total / (h_total + reg_lambda)
        gl = 0.0
        hl = 0.0
        for i in range(n - 1):
            k = order_mv[i]
            gl = gl + g[k]
            hl = hl + h[k]
            xcur = col_mv[k]
            xnext = col_mv[order_mv[i + 1]]
            if xcur == xnext:
                continue
            if hl < min_child_hessian:
                continue
            hr = h_total - hl
            if hr < min_child_hessian:
                continue
            gr = g_total - gl
            gain = 0.5 * (gl * gl / (hl + reg_lambda) + gr * gr / (hr + reg_lambda) - parent) - gamma
            if gain > best_gain:
                best_feat = <int> j
                best_thr = (xcur + xnext) / 2.0
                best_gain = gain
    return best_feat, best_thr, best_gain
