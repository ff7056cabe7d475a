# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels; see ``_pykernels`` for the reference semantics."""

import numpy as np
from libc.math cimport sqrt, fabs, NAN

NAME = "cython"

CHOL_OK = 0
CHOL_NEGATIVE_PIVOT = 1

cdef double _TINY_DENOM = 1e-300
TAIL_CAP = 1e3
cdef double _TAIL_CAP = 1e3


cdef inline double _tail_factor(double delta, double delta_prev) noexcept nogil:
    cdef double rho
    if not delta_prev > 0.0:
        return _TAIL_CAP
    rho = delta / delta_prev
    if rho >= 1.0:
        return _TAIL_CAP
    return min(max(rho / (1.0 - rho), 1.0), _TAIL_CAP)


def cholesky_upper(const double[:, ::1] M, double thr, double row_tol):
    cdef Py_ssize_t d = M.shape[0]
    cdef Py_ssize_t i, j, k
    cdef double s, r, acc, row_max
    cdef int rank = 0
    R_arr = np.zeros((d, d))
    cdef double[:, ::1] R = R_arr
    cdef double[::1] row = np.empty(d)
    for k in range(d):
        s = M[k, k]
        for i in range(k):
            s -= R[i, k] * R[i, k]
        if s < -thr:
            return R_arr, rank, CHOL_NEGATIVE_PIVOT, k, s
        row_max = 0.0
        for j in range(k + 1, d):
            acc = M[k, j]
            for i in range(k):
                acc -= R[i, k] * R[i, j]
            row[j] = acc
            if fabs(acc) > row_max:
                row_max = fabs(acc)
        if s <= thr and (s <= 0.0 or row_max <= row_tol):
            continue
        r = sqrt(s)
        R[k, k] = r
        for j in range(k + 1, d):
            R[k, j] = row[j] / r
        rank += 1
    return R_arr, rank, CHOL_OK, -1, 0.0


cdef inline double _dot(const double* a, const double* b, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i
    cdef double acc = 0.0
    for i in range(n):
        acc += a[i] * b[i]
    return acc


def power_iteration(const double[:, ::1] A, v0, double tol, int max_iter):
    cdef Py_ssize_t d = A.shape[0]
    cdef Py_ssize_t i, j
    cdef int it
    cdef double rq = 0.0, rq_prev = NAN, delta, delta_prev = NAN, nrm, residual = np.inf, t
    v_arr = np.array(v0, dtype=np.float64)
    v_arr /= np.linalg.norm(v_arr)
    cdef double[::1] v = v_arr
    cdef double[::1] y = np.empty(d)
    cdef double[::1] w = np.empty(d)
    for it in range(1, max_iter + 1):
        for i in range(d):
            y[i] = _dot(&A[i, 0], &v[0], d)
        rq = _dot(&y[0], &y[0], d)
        if rq == 0.0:
            return 0.0, v_arr, it, True, 0.0
        for j in range(d):
            w[j] = 0.0
        for i in range(d):
            t = y[i]
            for j in range(d):
                w[j] += A[i, j] * t
        residual = 0.0
        for j in range(d):
            t = w[j] - rq * v[j]
            residual += t * t
        residual = sqrt(residual) / rq
        delta = fabs(rq - rq_prev)
        if delta * _tail_factor(delta, delta_prev) <= tol * rq:
            return sqrt(rq), v_arr, it, True, residual
        rq_prev = rq
        delta_prev = delta
        nrm = sqrt(_dot(&w[0], &w[0], d))
        for j in range(d):
            v[j] = w[j] / nrm
    return sqrt(rq), v_arr, max_iter, False, residual


cdef inline double _map_norm(const double[:, ::1] L, const double* x, const double* y,
                             double* diff, Py_ssize_t d) noexcept nogil:
    # ||L (x - y)||
    cdef Py_ssize_t i
    cdef double acc = 0.0, t
    for i in range(d):
        diff[i] = x[i] - y[i]
    for i in range(d):
        t = _dot(&L[i, 0], diff, d)
        acc += t * t
    return sqrt(acc)


cdef inline double _bilinear(const double[:, ::1] M, const double* x, const double* y,
                             Py_ssize_t d) noexcept nogil:
    cdef Py_ssize_t i
    cdef double acc = 0.0
    for i in range(d):
        acc += x[i] * _dot(&M[i, 0], y, d)
    return acc


cdef inline double _pair_dist(const double* x1, const double* x2, const double* y1,
                              const double* y2, Py_ssize_t d) noexcept nogil:
    cdef Py_ssize_t i
    cdef double acc = 0.0, a, b
    for i in range(d):
        a = x1[i] - y1[i]
        b = x2[i] - y2[i]
        acc += a * a + b * b
    return sqrt(acc)


def mahalanobis_values(const double[:, ::1] L, const double[:, ::1] X1, const double[:, ::1] X2):
    cdef Py_ssize_t n = X1.shape[0], d = X1.shape[1], k
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    cdef double[::1] diff = np.empty(d)
    with nogil:
        for k in range(n):
            out[k] = _map_norm(L, &X1[k, 0], &X2[k, 0], &diff[0], d)
    return out_arr


def bilinear_values(const double[:, ::1] M, const double[:, ::1] X1, const double[:, ::1] X2):
    cdef Py_ssize_t n = X1.shape[0], d = X1.shape[1], k
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    with nogil:
        for k in range(n):
            out[k] = _bilinear(M, &X1[k, 0], &X2[k, 0], d)
    return out_arr


def mahalanobis_slopes(const double[:, ::1] L, const double[:, ::1] X1, const double[:, ::1] X2,
                       const double[:, ::1] Y1, const double[:, ::1] Y2):
    cdef Py_ssize_t n = X1.shape[0], d = X1.shape[1], k
    cdef double f, g, den
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    cdef double[::1] diff = np.empty(d)
    with nogil:
        for k in range(n):
            den = _pair_dist(&X1[k, 0], &X2[k, 0], &Y1[k, 0], &Y2[k, 0], d)
            if den <= _TINY_DENOM:
                out[k] = NAN
                continue
            f = _map_norm(L, &X1[k, 0], &X2[k, 0], &diff[0], d)
            g = _map_norm(L, &Y1[k, 0], &Y2[k, 0], &diff[0], d)
            out[k] = fabs(f - g) / den
    return out_arr


def bilinear_slopes(const double[:, ::1] M, const double[:, ::1] X1, const double[:, ::1] X2,
                    const double[:, ::1] Y1, const double[:, ::1] Y2):
    cdef Py_ssize_t n = X1.shape[0], d = X1.shape[1], k
    cdef double f, g, den
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    with nogil:
        for k in range(n):
            den = _pair_dist(&X1[k, 0], &X2[k, 0], &Y1[k, 0], &Y2[k, 0], d)
            if den <= _TINY_DENOM:
                out[k] = NAN
                continue
            f = _bilinear(M, &X1[k, 0], &X2[k, 0], d)
            g = _bilinear(M, &Y1[k, 0], &Y2[k, 0], d)
            out[k] = fabs(f - g) / den
    return out_arr


def mahalanobis_grad_norms(const double[:, ::1] M, const double[:, ::1] L,
                           const double[:, ::1] X1, const double[:, ::1] X2, double zero_rel):
    cdef Py_ssize_t n = X1.shape[0], d = X1.shape[1], k, i
    cdef double dist, thresh, acc, t
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    cdef double[::1] diff = np.empty(d)
    with nogil:
        for k in range(n):
            dist = _map_norm(L, &X1[k, 0], &X2[k, 0], &diff[0], d)
            thresh = zero_rel * (1.0 + sqrt(_dot(&X1[k, 0], &X1[k, 0], d))
                                 + sqrt(_dot(&X2[k, 0], &X2[k, 0], d)))
            if dist <= thresh:
                out[k] = NAN
                continue
            acc = 0.0
            for i in range(d):
                t = _dot(&M[i, 0], &diff[0], d)
                acc += t * t
            out[k] = sqrt(2.0 * acc) / dist
    return out_arr


def bilinear_grad_norms(const double[:, ::1] M, const double[:, ::1] X1, const double[:, ::1] X2):
    cdef Py_ssize_t n = X1.shape[0], d = X1.shape[1], k, i, j
    cdef double acc, t, s
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    with nogil:
        for k in range(n):
            acc = 0.0
            for i in range(d):
                t = _dot(&M[i, 0], &X2[k, 0], d)
                s = 0.0
                for j in range(d):
                    s += M[j, i] * X1[k, j]
                acc += t * t + s * s
            out[k] = sqrt(acc)
    return out_arr
