# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled pointwise kernels; mirror of ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, hypot

cnp.import_array()


def sphere_nearest(const double[:, ::1] p, double R):
    cdef Py_ssize_t m = p.shape[0], n = p.shape[1], i, j
    cdef double s, scale
    nearest_arr = np.empty((m, n))
    dist_arr = np.empty(m)
    norm_arr = np.empty(m)
    cdef double[:, ::1] nearest = nearest_arr
    cdef double[::1] dist = dist_arr
    cdef double[::1] norm = norm_arr
    for i in range(m):
        s = 0.0
        for j in range(n):
            s += p[i, j] * p[i, j]
        s = sqrt(s)
        norm[i] = s
        dist[i] = fabs(s - R)
        scale = R / s if s > 0.0 else float("nan")
        for j in range(n):
            nearest[i, j] = p[i, j] * scale
    return nearest_arr, dist_arr, norm_arr


def sphere_tangent(const double[:, ::1] p, const double[:, ::1] w):
    cdef Py_ssize_t m = p.shape[0], n = p.shape[1], i, j
    cdef double pw, pp, coef
    out_arr = np.empty((m, n))
    cdef double[:, ::1] out = out_arr
    for i in range(m):
        pw = 0.0
        pp = 0.0
        for j in range(n):
            pw += p[i, j] * w[i, j]
            pp += p[i, j] * p[i, j]
        coef = pw / pp if pp > 0.0 else float("nan")
        for j in range(n):
            out[i, j] = w[i, j] - coef * p[i, j]
    return out_arr


def circle_pair_nearest(const double[:, ::1] p, double r, double h):
    cdef Py_ssize_t m = p.shape[0], i
    cdef double rho, dr, dt, db, scale
    nearest_arr = np.empty((m, 3))
    dist_arr = np.empty(m)
    gap_arr = np.empty(m)
    rho_arr = np.empty(m)
    cdef double[:, ::1] nearest = nearest_arr
    cdef double[::1] dist = dist_arr
    cdef double[::1] gap = gap_arr
    cdef double[::1] rhos = rho_arr
    for i in range(m):
        rho = hypot(p[i, 0], p[i, 1])
        rhos[i] = rho
        dr = rho - r
        dt = hypot(dr, p[i, 2] - h)
        db = hypot(dr, p[i, 2] + h)
        scale = r / rho if rho > 0.0 else float("nan")
        nearest[i, 0] = p[i, 0] * scale
        nearest[i, 1] = p[i, 1] * scale
        if dt <= db:
            nearest[i, 2] = h
            dist[i] = dt
        else:
            nearest[i, 2] = -h
            dist[i] = db
        gap[i] = fabs(dt - db)
    return nearest_arr, dist_arr, gap_arr, rho_arr


def circle_pair_tangent(const double[:, ::1] p, const double[:, ::1] w):
    cdef Py_ssize_t m = p.shape[0], i
    cdef double rho2, coef
    out_arr = np.empty((m, 3))
    cdef double[:, ::1] out = out_arr
    for i in range(m):
        rho2 = p[i, 0] * p[i, 0] + p[i, 1] * p[i, 1]
        coef = (p[i, 0] * w[i, 1] - p[i, 1] * w[i, 0]) / rho2 if rho2 > 0.0 else float("nan")
        out[i, 0] = -coef * p[i, 1]
        out[i, 1] = coef * p[i, 0]
        out[i, 2] = 0.0
    return out_arr


def correlate_circular(const double[:, ::1] density, const double[:, ::1] weights, Py_ssize_t support):
    cdef Py_ssize_t ns = density.shape[0], M = density.shape[1]
    cdef Py_ssize_t i, j, o, oi, shift
    cdef double wv
    if 2 * support + 1 > M:
        support = (M - 1) // 2
    out_arr = np.zeros(M)
    cdef double[::1] out = out_arr
    for i in range(ns):
        for o in range(-support, support + 1):
            oi = o if o >= 0 else o + M
            wv = weights[i, oi]
            if wv == 0.0:
                continue
            # out[j] += wv * density[i, (j + o) mod M], split at the wrap point
            shift = oi
            for j in range(M - shift):
                out[j] += wv * density[i, j + shift]
            for j in range(M - shift, M):
                out[j] += wv * density[i, j + shift - M]
    return out_arr
