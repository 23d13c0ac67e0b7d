# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops. See ``_fallback.py`` for the numpy twins."""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor

cnp.import_array()


cdef inline double _ref(double l0, long long cpos, long long cneg, double tp, double tn) noexcept nogil:
    return l0 + (<double>cpos * tp - <double>cneg * tn)


cdef void _count(const double[::1] l0, const double[::1] b,
                 const long long[::1] cpos, const long long[::1] cneg,
                 long long[::1] n_up, long long[::1] n_dn,
                 double tp, double tn) noexcept nogil:
    cdef Py_ssize_t i, n = l0.shape[0]
    cdef long long up, dn
    for i in range(n):
        up = 0
        while b[i] - _ref(l0[i], cpos[i] + up, cneg[i], tp, tn) >= tp:
            up += 1
        dn = 0
        while _ref(l0[i], cpos[i] + up, cneg[i] + dn, tp, tn) - b[i] >= tn:
            dn += 1
        n_up[i] = up
        n_dn[i] = dn


def simulate_interval(double[::1] l0, double[::1] a, double[::1] b,
                      long long[::1] cpos, long long[::1] cneg,
                      long long t_start, long long dt,
                      double theta_pos, double theta_neg, long long pix_offset=0):
    cdef Py_ssize_t n = l0.shape[0], i, k = 0
    cdef long long j, total_up = 0, total_dn = 0, off
    cdef double level, frac
    n_up_arr = np.empty(n, dtype=np.int64)
    n_dn_arr = np.empty(n, dtype=np.int64)
    cdef long long[::1] n_up = n_up_arr
    cdef long long[::1] n_dn = n_dn_arr
    with nogil:
        _count(l0, b, cpos, cneg, n_up, n_dn, theta_pos, theta_neg)
        for i in range(n):
            total_up += n_up[i]
            total_dn += n_dn[i]
    t_arr = np.empty(total_up + total_dn, dtype=np.int64)
    pix_arr = np.empty(total_up + total_dn, dtype=np.int64)
    p_arr = np.empty(total_up + total_dn, dtype=np.int8)
    cdef long long[::1] t = t_arr
    cdef long long[::1] pix = pix_arr
    cdef signed char[::1] p = p_arr
    with nogil:
        # positives first, then negatives, each in pixel order
        for i in range(n):
            for j in range(1, n_up[i] + 1):
                level = _ref(l0[i], cpos[i] + j, cneg[i], theta_pos, theta_neg)
                frac = (level - a[i]) / (b[i] - a[i])
                off = <long long>floor(frac * <double>dt)
                if off < 0:
                    off = 0
                elif off > dt - 1:
                    off = dt - 1
                t[k] = t_start + off
                pix[k] = i + pix_offset
                p[k] = 1
                k += 1
        for i in range(n):
            for j in range(1, n_dn[i] + 1):
                level = _ref(l0[i], cpos[i] + n_up[i], cneg[i] + j, theta_pos, theta_neg)
                frac = (level - a[i]) / (b[i] - a[i])
                off = <long long>floor(frac * <double>dt)
                if off < 0:
                    off = 0
                elif off > dt - 1:
                    off = dt - 1
                t[k] = t_start + off
                pix[k] = i + pix_offset
                p[k] = -1
                k += 1
        for i in range(n):
            cpos[i] += n_up[i]
            cneg[i] += n_dn[i]
    return t_arr, pix_arr, p_arr


def count_events(const long long[::1] pix, const signed char[::1] p, Py_ssize_t npix):
    pos_arr = np.zeros(npix, dtype=np.int64)
    neg_arr = np.zeros(npix, dtype=np.int64)
    cdef long long[::1] pos = pos_arr
    cdef long long[::1] neg = neg_arr
    cdef Py_ssize_t i
    with nogil:
        for i in range(pix.shape[0]):
            if p[i] > 0:
                pos[pix[i]] += 1
            else:
                neg[pix[i]] += 1
    return pos_arr, neg_arr


def voxel_accumulate(const double[::1] tstar, const long long[::1] pix,
                     const signed char[::1] p, Py_ssize_t bins, Py_ssize_t npix):
    out_arr = np.zeros(bins * npix, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    cdef long long lower
    cdef double w_upper, pol
    with nogil:
        for i in range(tstar.shape[0]):
            lower = <long long>floor(tstar[i])
            w_upper = tstar[i] - <double>lower
            pol = <double>p[i]
            if 0 <= lower < bins:
                out[lower * npix + pix[i]] += pol * (1.0 - w_upper)
            if w_upper > 0 and 0 <= lower + 1 < bins:
                out[(lower + 1) * npix + pix[i]] += pol * w_upper
    return out_arr
