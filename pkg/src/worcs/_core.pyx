# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels for the grid scans and sequential trace loops.

Signatures mirror `worcs._ref`; `worcs._backend` picks whichever imports.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, lgamma, log, log1p, sqrt

cnp.import_array()

BACKEND_NAME = "cython"

SCHED_CONSTANT = 0
SCHED_FIXED_OPT = 1
SCHED_HOEFFDING_SPREAD = 2
SCHED_EB_T0 = 3
SCHED_EB_SPREAD = 4
SCHED_EB_CI = 5
SCHED_CUSTOM = 6


def lgamma_table(Py_ssize_t n):
    out = np.empty(n + 1, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t i
    for i in range(n + 1):
        o[i] = lgamma(i + 1.0)
    return out


def log_choose_grid(Py_ssize_t n, double[::1] table):
    out = np.empty(n + 1, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t k
    for k in range(n + 1):
        o[k] = table[n] - table[k] - table[n - k]
    return out


def ppr_log_ratio_grid(double[::1] logc_pop, double[::1] table,
                       Py_ssize_t t, Py_ssize_t s, double lbeta_const,
                       out=None):
    cdef Py_ssize_t n_grid = logc_pop.shape[0] - 1
    cdef Py_ssize_t m = n_grid - t
    if out is None:
        out = np.empty(n_grid + 1, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t n, k
    for n in range(s):
        o[n] = INFINITY
    for n in range(s + m + 1, n_grid + 1):
        o[n] = INFINITY
    for k in range(m + 1):
        o[s + k] = lbeta_const + logc_pop[s + k] - (
            table[m] - table[k] - table[m - k])
    return out


cdef inline double _lbeta(double a, double b) nogil:
    return lgamma(a) + lgamma(b) - lgamma(a + b)


cdef void _point_trace_row(const double[::1] bits, double n_pop,
                           double n_plus, double a, double b,
                           double logc_pop_at, double lbeta_ab,
                           double[::1] out) nogil:
    cdef Py_ssize_t t_len = bits.shape[0]
    cdef Py_ssize_t i
    cdef double s = 0.0, t, k, m
    for i in range(t_len):
        s += bits[i]
        t = i + 1.0
        k = n_plus - s
        m = n_pop - t
        if k < 0.0 or k > m:
            out[i] = INFINITY
        else:
            out[i] = (logc_pop_at
                      - (lgamma(m + 1.0) - lgamma(k + 1.0) - lgamma(m - k + 1.0))
                      + _lbeta(a + s, b + t - s) - lbeta_ab)


def ppr_point_trace(bits, double n_pop, double n_plus, double a, double b):
    arr = np.ascontiguousarray(bits, dtype=np.float64)
    cdef double lbeta_ab = _lbeta(a, b)
    cdef double logc_pop_at = (lgamma(n_pop + 1.0) - lgamma(n_plus + 1.0)
                               - lgamma(n_pop - n_plus + 1.0))
    out = np.empty_like(arr)
    cdef double[:, ::1] b2
    cdef double[:, ::1] o2
    cdef Py_ssize_t r
    if arr.ndim == 1:
        _point_trace_row(arr, n_pop, n_plus, a, b, logc_pop_at, lbeta_ab, out)
    else:
        b2 = arr
        o2 = out
        for r in range(b2.shape[0]):
            _point_trace_row(b2[r], n_pop, n_plus, a, b,
                             logc_pop_at, lbeta_ab, o2[r])
    return out


def betabin_logpmf(k, double n, double a, double b):
    karr = np.atleast_1d(np.asarray(k, dtype=np.float64))
    out = np.empty_like(karr)
    cdef double[::1] kv = karr
    cdef double[::1] o = out
    cdef double lbeta_ab = _lbeta(a, b)
    cdef Py_ssize_t i
    for i in range(kv.shape[0]):
        o[i] = (lgamma(n + 1.0) - lgamma(kv[i] + 1.0) - lgamma(n - kv[i] + 1.0)
                + _lbeta(kv[i] + a, n - kv[i] + b) - lbeta_ab)
    if np.ndim(k) == 0:
        return float(out[0])
    return out


cdef void _bounded_trace_row(const double[::1] x, double n_pop, double lower,
                             double upper, double alpha, int sched_kind,
                             double t0, double lam_fixed,
                             const double[::1] custom, bint dev_plain,
                             double[::1] lam_o, double[::1] num_w_o,
                             double[::1] den_w_o, double[::1] psi_h_o,
                             double[::1] psi_e_var_o, double[::1] mu4_o,
                             double[::1] mean_o, double[::1] sig2p_o,
                             double[::1] vproc_o) nogil:
    cdef Py_ssize_t t_len = x.shape[0]
    cdef double c = upper - lower
    cdef double mid = 0.5 * (lower + upper)
    cdef double big_log = log(2.0 / alpha)
    cdef double s = 0.0, adv = 0.0, num4 = 0.0
    cdef double num_w = 0.0, den_w = 0.0, psi_h = 0.0, psi_e_var = 0.0
    cdef double sq_dev_mean = 0.0, vproc = 0.0
    cdef double mu4_lag = mid, mean_lag = mid
    cdef double sigma2_prev = c * c / 4.0
    cdef double i, pop_left, carry, w, lam, dev, psi_e_step, mean, mu4, xv
    cdef Py_ssize_t j
    for j in range(t_len):
        i = j + 1.0
        xv = x[j]
        pop_left = n_pop - i + 1.0
        carry = s / pop_left
        w = 1.0 + (i - 1.0) / pop_left
        adv += (i - 1.0) / pop_left

        if sched_kind == 0:
            lam = lam_fixed
        elif sched_kind == 1:
            lam = sqrt(8.0 * big_log / (t0 * c * c))
        elif sched_kind == 2:
            lam = sqrt(8.0 * big_log / (i * log(i + 1.0) * c * c))
            if lam > 1.0 / c:
                lam = 1.0 / c
        elif sched_kind == 3:
            lam = sqrt(2.0 * big_log / (sigma2_prev * t0))
            if lam > 1.0 / (2.0 * c):
                lam = 1.0 / (2.0 * c)
        elif sched_kind == 4:
            lam = sqrt(2.0 * big_log / (sigma2_prev * i * log(i + 1.0)))
            if lam > 1.0 / (2.0 * c):
                lam = 1.0 / (2.0 * c)
        elif sched_kind == 5:
            lam = sqrt(2.0 * big_log / (t0 * sigma2_prev))
            if lam > 1.0 / (2.0 * c):
                lam = 1.0 / (2.0 * c)
        else:
            lam = custom[j]
        lam_o[j] = lam
        sig2p_o[j] = sigma2_prev

        dev = xv - (mean_lag if dev_plain else mu4_lag)
        if lam * c < 1.0:
            psi_e_step = (-log1p(-c * lam) - c * lam) / 4.0
            psi_e_var += (2.0 / c) * (2.0 / c) * dev * dev * psi_e_step
        else:
            psi_e_var = INFINITY
        psi_h += lam * lam * c * c / 8.0
        num_w += lam * (xv + carry)
        den_w += lam * w
        vproc += (xv - mu4_lag) * (xv - mu4_lag)

        s += xv
        num4 += xv + carry
        mu4 = num4 / (i + adv)
        mean = s / i
        sq_dev_mean += (xv - mean) * (xv - mean)
        sigma2_prev = (c * c / 4.0 + sq_dev_mean) / (i + 1.0)
        mu4_lag = mu4
        mean_lag = mean

        num_w_o[j] = num_w
        den_w_o[j] = den_w
        psi_h_o[j] = psi_h
        psi_e_var_o[j] = psi_e_var
        mu4_o[j] = mu4
        mean_o[j] = mean
        vproc_o[j] = vproc


def bounded_trace(x, double n_pop, double lower, double upper, double alpha,
                  int sched_kind, double t0=0.0, double lam_fixed=0.0,
                  custom=None, bint dev_plain=False):
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if arr.shape[arr.ndim - 1] > n_pop:
        raise ValueError("trace longer than the population")
    cdef double[::1] cust
    if custom is None:
        cust = np.empty(0, dtype=np.float64)
    else:
        cust = np.ascontiguousarray(custom, dtype=np.float64)
    names = ("lam", "num_w", "den_w", "psi_h", "psi_e_var", "mu4", "mean",
             "sigma2_prev", "vproc")
    outs = {name: np.empty_like(arr) for name in names}
    cdef double[:, ::1] x2
    cdef Py_ssize_t r
    if arr.ndim == 1:
        _bounded_trace_row(arr, n_pop, lower, upper, alpha, sched_kind, t0,
                           lam_fixed, cust, dev_plain,
                           outs["lam"], outs["num_w"], outs["den_w"],
                           outs["psi_h"], outs["psi_e_var"], outs["mu4"],
                           outs["mean"], outs["sigma2_prev"], outs["vproc"])
    else:
        x2 = arr
        for r in range(x2.shape[0]):
            _bounded_trace_row(x2[r], n_pop, lower, upper, alpha, sched_kind,
                               t0, lam_fixed, cust, dev_plain,
                               outs["lam"][r], outs["num_w"][r],
                               outs["den_w"][r], outs["psi_h"][r],
                               outs["psi_e_var"][r], outs["mu4"][r],
                               outs["mean"][r], outs["sigma2_prev"][r],
                               outs["vproc"][r])
    return outs
