"""Pure-numpy reference implementations of the hot kernels.

This module is the fallback backend: `worcs._backend` prefers the compiled
extension (`worcs._core`) and falls back to these functions with identical
signatures and semantics.  Everything here accepts trailing-axis batches
where noted, so simulation code can run thousands of replications without
Python-level loops.
"""

from __future__ import annotations

import numpy as np
from scipy.special import betaln, gammaln

BACKEND_NAME = "python"

# Schedule codes shared with the compiled backend.
SCHED_CONSTANT = 0
SCHED_FIXED_OPT = 1
SCHED_HOEFFDING_SPREAD = 2
SCHED_EB_T0 = 3
SCHED_EB_SPREAD = 4
SCHED_EB_CI = 5
SCHED_CUSTOM = 6


def lgamma_table(n):
    """Return G with G[i] = lgamma(i + 1) for i = 0..n."""
    return gammaln(np.arange(1, n + 2, dtype=np.float64))


def log_choose_grid(n, table):
    """log C(n, k) for k = 0..n, using a precomputed lgamma table."""
    k = np.arange(n + 1)
    return table[n] - table[k] - table[n - k]


def ppr_log_ratio_grid(logc_pop, table, t, s, lbeta_const, out=None):
    """Fill the log prior/posterior ratio over the count grid 0..N.

    Parameters
    ----------
    logc_pop : ndarray
        log C(N, n) for n = 0..N (time-independent part).
    table : ndarray
        lgamma table from `lgamma_table(N)`.
    t, s : int
        Observations so far and their running success count.
    lbeta_const : float
        lbeta(a + s, b + t - s) - lbeta(a, b).

    Returns
    -------
    ndarray of length N + 1; +inf where the working posterior has no support
    (n < s or N - n < t - s).
    """
    n_grid = logc_pop.shape[0] - 1
    m = n_grid - t
    if out is None:
        out = np.empty(n_grid + 1, dtype=np.float64)
    out[:s] = np.inf
    out[s + m + 1:] = np.inf
    k = np.arange(m + 1)
    logc_post = table[m] - table[k] - table[m - k]
    out[s:s + m + 1] = lbeta_const + logc_pop[s:s + m + 1] - logc_post
    return out


def ppr_point_trace(bits, n_pop, n_plus, a, b):
    """log R_t(n_plus) after each observation of a binary stream.

    `bits` may be 1-D (one stream) or 2-D (replications, time); the trace is
    computed along the last axis.  Entries are +inf once the observed history
    contradicts `n_plus`.
    """
    bits = np.asarray(bits, dtype=np.float64)
    t = np.arange(1, bits.shape[-1] + 1, dtype=np.float64)
    s = np.cumsum(bits, axis=-1)
    k = n_plus - s
    lbeta_ab = betaln(a, b)
    logc_pop_at = (
        gammaln(n_pop + 1) - gammaln(n_plus + 1) - gammaln(n_pop - n_plus + 1)
    )
    m = n_pop - t
    with np.errstate(invalid="ignore"):
        logc_post = gammaln(m + 1) - gammaln(k + 1) - gammaln(m - k + 1)
        out = (
            logc_pop_at
            - logc_post
            + betaln(a + s, b + t - s)
            - lbeta_ab
        )
    bad = (k < 0) | (k > m)
    out[bad] = np.inf
    return out


def betabin_logpmf(k, n, a, b):
    """Log pmf of the beta-binomial(n, a, b) law at k (array-friendly)."""
    k = np.asarray(k, dtype=np.float64)
    return (
        gammaln(n + 1)
        - gammaln(k + 1)
        - gammaln(n - k + 1)
        + betaln(k + a, n - k + b)
        - betaln(a, b)
    )


def _lambda_sequence(kind, t_idx, sigma2_prev, c, alpha, t0, lam_fixed, custom):
    big_log = np.log(2.0 / alpha)
    shape = sigma2_prev.shape
    if kind == SCHED_CONSTANT:
        lam = np.float64(lam_fixed)
    elif kind == SCHED_FIXED_OPT:
        lam = np.float64(np.sqrt(8.0 * big_log / (t0 * c * c)))
    elif kind == SCHED_HOEFFDING_SPREAD:
        lam = np.minimum(
            np.sqrt(8.0 * big_log / (t_idx * np.log(t_idx + 1.0) * c * c)),
            1.0 / c)
    elif kind == SCHED_EB_T0:
        lam = np.minimum(np.sqrt(2.0 * big_log / (sigma2_prev * t0)),
                         1.0 / (2.0 * c))
    elif kind == SCHED_EB_SPREAD:
        lam = np.minimum(
            np.sqrt(2.0 * big_log
                    / (sigma2_prev * t_idx * np.log(t_idx + 1.0))),
            1.0 / (2.0 * c))
    elif kind == SCHED_EB_CI:
        lam = np.minimum(np.sqrt(2.0 * big_log / (t0 * sigma2_prev)),
                         1.0 / (2.0 * c))
    elif kind == SCHED_CUSTOM:
        lam = np.asarray(custom, dtype=np.float64)
    else:
        raise ValueError(f"unknown schedule code {kind}")
    return np.broadcast_to(lam, shape).copy()


def bounded_trace(x, n_pop, lower, upper, alpha, sched_kind, t0=0.0,
                  lam_fixed=0.0, custom=None, dev_plain=False):
    """Full trace of the bounded-mean confidence sequence accumulators.

    `x` may be 1-D or 2-D (replications on the leading axis).  Returns a dict
    of arrays, each shaped like `x`:

    - ``lam``          predictable weight used at step i
    - ``num_w, den_w`` weighted-estimator numerator / denominator sums
    - ``psi_h``        running sum of the quadratic psi terms
    - ``psi_e_var``    running sum of the variance-scaled log-type psi terms
    - ``mu4``          unweighted shrinking-population estimator after step i
    - ``mean``         plain running mean
    - ``sigma2_prev``  variance estimate available *before* step i
    - ``vproc``        running sum of squared deviations from the lagged mu4

    The schedule is evaluated from lagged quantities only, so the emitted
    ``lam`` never depends on the observation it is applied to.
    """
    x = np.asarray(x, dtype=np.float64)
    t_len = x.shape[-1]
    if t_len > n_pop:
        raise ValueError("trace longer than the population")
    c = upper - lower
    mid = 0.5 * (lower + upper)
    i = np.arange(1, t_len + 1, dtype=np.float64)
    pop_left = n_pop - i + 1.0

    s = np.cumsum(x, axis=-1)
    s_prev = s - x
    carry = s_prev / pop_left
    w = 1.0 + (i - 1.0) / pop_left
    adv = np.cumsum((i - 1.0) / pop_left)

    num4 = np.cumsum(x + carry, axis=-1)
    den4 = i + adv
    mu4 = num4 / den4
    mu4_lag = np.concatenate(
        [np.full(x.shape[:-1] + (1,), mid), mu4[..., :-1]], axis=-1
    )

    mean = s / i
    mean_lag = np.concatenate(
        [np.full(x.shape[:-1] + (1,), mid), mean[..., :-1]], axis=-1
    )

    sq_dev_mean = np.cumsum((x - mean) ** 2, axis=-1)
    sigma2 = (c * c / 4.0 + sq_dev_mean) / (i + 1.0)
    sigma2_prev = np.concatenate(
        [np.full(x.shape[:-1] + (1,), c * c / 4.0), sigma2[..., :-1]], axis=-1
    )

    lam = _lambda_sequence(sched_kind, i, sigma2_prev, c, alpha, t0,
                           lam_fixed, custom)

    dev = x - (mean_lag if dev_plain else mu4_lag)
    in_domain = lam * c < 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        psi_e_step = np.where(
            in_domain, (-np.log1p(-c * np.where(in_domain, lam, 0.0))
                        - c * lam) / 4.0, 0.0)
    psi_e_inc = np.where(in_domain, (2.0 / c) ** 2 * dev * dev * psi_e_step,
                         np.inf)
    psi_e_var = np.cumsum(psi_e_inc, axis=-1)
    psi_h = np.cumsum(lam * lam * c * c / 8.0, axis=-1)

    num_w = np.cumsum(lam * (x + carry), axis=-1)
    den_w = np.cumsum(lam * w, axis=-1)
    vproc = np.cumsum((x - mu4_lag) ** 2, axis=-1)

    return {
        "lam": lam,
        "num_w": num_w,
        "den_w": den_w,
        "psi_h": psi_h,
        "psi_e_var": psi_e_var,
        "mu4": mu4,
        "mean": mean,
        "sigma2_prev": sigma2_prev,
        "vproc": vproc,
    }
