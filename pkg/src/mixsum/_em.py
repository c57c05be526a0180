"""Compiled EM loop for univariate Gaussian mixtures.

Mirrors the numpy implementation in :mod:`mixsum.summary_fit` step for
step; the numpy path remains the reference and handles d > 1.
"""

import math

import numpy as np
from numba import njit

LOG_2PI = math.log(2.0 * math.pi)


@njit(cache=True, error_model="numpy")
def _e_step(x, w, mu, var, lp, point_ll):
    n = x.shape[0]
    k = w.shape[0]
    logw = np.log(w)
    half_logvar = 0.5 * np.log(var)
    total = 0.0
    for i in range(n):
        mx = -np.inf
        for q in range(k):
            r = x[i] - mu[q]
            v = logw[q] - 0.5 * LOG_2PI - half_logvar[q] - 0.5 * r * r / var[q]
            lp[i, q] = v
            if v > mx:
                mx = v
        s = 0.0
        for q in range(k):
            s += math.exp(lp[i, q] - mx)
        norm = mx + math.log(s)
        point_ll[i] = norm
        for q in range(k):
            lp[i, q] = math.exp(lp[i, q] - norm)
        total += norm
    return total


@njit(cache=True, error_model="numpy")
def _m_step(x, resp, w, mu, var, floor):
    n = x.shape[0]
    k = w.shape[0]
    for q in range(k):
        nk = 0.0
        s = 0.0
        for i in range(n):
            nk += resp[i, q]
            s += resp[i, q] * x[i]
        m = s / nk
        ss = 0.0
        for i in range(n):
            r = x[i] - m
            ss += resp[i, q] * r * r
        w[q] = nk
        mu[q] = m
        v = ss / nk
        var[q] = v if v >= floor else floor
    tot = w.sum()
    for q in range(k):
        w[q] /= tot


@njit(cache=True, error_model="numpy")
def em_uni(x, w, mu, var, max_iters, rel_tol, floor, min_weight, data_var):
    """EM from given parameters (modified in place).

    Returns (trace, n_trace, status, reinits) where status is 1 when
    converged, 0 when the iteration cap was hit and -1 on a non-finite
    log-likelihood.
    """
    n = x.shape[0]
    k = w.shape[0]
    lp = np.empty((n, k))
    point_ll = np.empty(n)
    trace = np.empty(max_iters + 1)
    nt = 0
    reinits = 0
    prev = -np.inf
    for _ in range(max_iters):
        ll = _e_step(x, w, mu, var, lp, point_ll)
        trace[nt] = ll
        nt += 1
        if not np.isfinite(ll):
            return trace, nt, -1, reinits
        if abs(ll - prev) <= rel_tol * abs(ll):
            return trace, nt, 1, reinits
        prev = ll
        _m_step(x, lp, w, mu, var, floor)
        n_dead = 0
        for q in range(k):
            if not (w[q] >= min_weight):
                n_dead += 1
        if n_dead > 0:
            worst = np.argsort(point_ll)
            j = 0
            for q in range(k):
                if not (w[q] >= min_weight):
                    mu[q] = x[worst[j % n]]
                    var[q] = data_var + floor
                    w[q] = 1.0 / n
                    j += 1
            tot = w.sum()
            for q in range(k):
                w[q] /= tot
            reinits += n_dead
            prev = -np.inf
    ll = _e_step(x, w, mu, var, lp, point_ll)
    trace[nt] = ll
    nt += 1
    return trace, nt, 0, reinits
