# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled reduction kernels; same contract as ``ruinopt._pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, pow, fabs

cnp.import_array()

NAME = "cython"


cdef inline void _add(double x, double* total, double* comp) noexcept nogil:
    cdef double t = total[0] + x
    if fabs(total[0]) >= fabs(x):
        comp[0] += (total[0] - t) + x
    else:
        comp[0] += (x - t) + total[0]
    total[0] = t


cdef int _times_ok(const double[::1] times, double horizon) noexcept nogil:
    cdef Py_ssize_t k
    for k in range(times.shape[0]):
        if not (times[k] > 0.0 and times[k] < horizon):
            return 0
    return 1


def inflated_totals(const cnp.int64_t[::1] offsets, const double[::1] times,
                    const double[::1] sizes, double r):
    cdef Py_ssize_t n = offsets.shape[0] - 1
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, k
    cdef double s, c
    with nogil:
        for i in range(n):
            s = 0.0
            c = 0.0
            for k in range(offsets[i], offsets[i + 1]):
                _add(exp(r * times[k]) * sizes[k], &s, &c)
            out[i] = s + c
    return out_arr


def malliavin_sums(const cnp.int64_t[::1] offsets, const double[::1] times,
                   const double[::1] sizes, double r, double a, double horizon):
    if not _times_ok(times, horizon):
        raise ValueError("jump time outside the open interval (0, T)")
    cdef Py_ssize_t n = offsets.shape[0] - 1
    out_arr = np.empty((n, 5))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, k, j
    cdef double t, e_x, w, wp
    cdef double s[5]
    cdef double c[5]
    with nogil:
        for i in range(n):
            for j in range(5):
                s[j] = 0.0
                c[j] = 0.0
            for k in range(offsets[i], offsets[i + 1]):
                t = times[k]
                e_x = exp(r * t) * sizes[k]
                w = pow(t, a) * pow(horizon - t, a)
                wp = a * w * (1.0 / t - 1.0 / (horizon - t))
                _add(e_x, &s[0], &c[0])
                _add(w * e_x, &s[1], &c[1])
                _add(wp, &s[2], &c[2])
                _add(w * w * e_x, &s[3], &c[3])
                _add(w * wp * e_x, &s[4], &c[4])
            for j in range(5):
                out[i, j] = s[j] + c[j]
    return out_arr


def path_ruin(const cnp.int64_t[::1] offsets, const double[::1] times,
              const double[::1] sizes, double r, double u, double drift, double b):
    cdef Py_ssize_t n = offsets.shape[0] - 1
    out_arr = np.zeros(n, dtype=np.int8)
    cdef cnp.int8_t[::1] out = out_arr
    cdef Py_ssize_t i, k
    cdef double cum
    with nogil:
        for i in range(n):
            cum = 0.0
            for k in range(offsets[i], offsets[i + 1]):
                cum = cum + b * (exp(r * times[k]) * sizes[k])
                if u + drift * times[k] - cum < 0.0:
                    out[i] = 1
                    break
    return out_arr


def inverse_w4_sums(const cnp.int64_t[::1] offsets, const double[::1] times,
                    double a, double horizon):
    if not _times_ok(times, horizon):
        raise ValueError("jump time outside the open interval (0, T)")
    cdef Py_ssize_t n = offsets.shape[0] - 1
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, k
    cdef double s, c, w
    with nogil:
        for i in range(n):
            s = 0.0
            c = 0.0
            for k in range(offsets[i], offsets[i + 1]):
                w = pow(times[k], a) * pow(horizon - times[k], a)
                _add(1.0 / (w * w * w * w), &s, &c)
            out[i] = s + c
    return out_arr
