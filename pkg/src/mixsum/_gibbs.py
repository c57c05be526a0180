"""Compiled inner loops of the collapsed Gibbs samplers.

Cluster ids are kept compact (0..K-1).  When a cluster empties, the last
cluster is moved into its slot.  All randomness comes in as pre-drawn
uniforms so the compiled code holds no RNG state of its own.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def _uni_pred_params(n, s, ss, mu0, k0, a0, b0):
    kn = k0 + n
    mun = (k0 * mu0 + s) / kn
    an = a0 + 0.5 * n
    bn = b0 + 0.5 * (ss + k0 * mu0 * mu0 - kn * mun * mun)
    if bn < 1e-300:
        bn = 1e-300
    nu = 2.0 * an
    s2 = bn * (kn + 1.0) / (an * kn)
    const = math.lgamma(0.5 * (nu + 1.0)) - math.lgamma(0.5 * nu) - 0.5 * math.log(nu * math.pi * s2)
    return mun, s2, nu, const


@njit(cache=True)
def _uni_logpred(y, loc, s2, nu, const):
    r = y - loc
    return const - 0.5 * (nu + 1.0) * math.log1p(r * r / (nu * s2))


@njit(cache=True)
def uni_sweep(y, z, counts, sums, sumsq, n_clusters, u, alpha, mu0, k0, a0, b0, max_clusters):
    """One Gibbs sweep over all observations; returns the new cluster count."""
    N = y.shape[0]
    cap = counts.shape[0]
    loc = np.empty(cap)
    s2 = np.empty(cap)
    nu = np.empty(cap)
    const = np.empty(cap)
    for c in range(n_clusters):
        loc[c], s2[c], nu[c], const[c] = _uni_pred_params(counts[c], sums[c], sumsq[c], mu0, k0, a0, b0)
    p_loc, p_s2, p_nu, p_const = _uni_pred_params(0.0, 0.0, 0.0, mu0, k0, a0, b0)
    logw = np.empty(cap + 1)
    K = n_clusters
    for i in range(N):
        yi = y[i]
        c = z[i]
        counts[c] -= 1
        sums[c] -= yi
        sumsq[c] -= yi * yi
        if counts[c] == 0:
            last = K - 1
            if c != last:
                counts[c] = counts[last]
                sums[c] = sums[last]
                sumsq[c] = sumsq[last]
                loc[c] = loc[last]
                s2[c] = s2[last]
                nu[c] = nu[last]
                const[c] = const[last]
                for j in range(N):
                    if z[j] == last:
                        z[j] = c
            counts[last] = 0
            sums[last] = 0.0
            sumsq[last] = 0.0
            K -= 1
        else:
            loc[c], s2[c], nu[c], const[c] = _uni_pred_params(counts[c], sums[c], sumsq[c], mu0, k0, a0, b0)
        mx = -np.inf
        for q in range(K):
            logw[q] = math.log(counts[q]) + _uni_logpred(yi, loc[q], s2[q], nu[q], const[q])
            if logw[q] > mx:
                mx = logw[q]
        n_opts = K
        if K < max_clusters:
            logw[K] = math.log(alpha) + _uni_logpred(yi, p_loc, p_s2, p_nu, p_const)
            if logw[K] > mx:
                mx = logw[K]
            n_opts = K + 1
        total = 0.0
        for q in range(n_opts):
            logw[q] = math.exp(logw[q] - mx)
            total += logw[q]
        target = u[i] * total
        acc = 0.0
        new = n_opts - 1
        for q in range(n_opts):
            acc += logw[q]
            if target < acc:
                new = q
                break
        if new == K:
            K += 1
        z[i] = new
        counts[new] += 1
        sums[new] += yi
        sumsq[new] += yi * yi
        loc[new], s2[new], nu[new], const[new] = _uni_pred_params(
            counts[new], sums[new], sumsq[new], mu0, k0, a0, b0
        )
    return K


@njit(cache=True)
def _mv_pred_params(n, s, ss, m0, kappa0, nu0, psi0):
    d = m0.shape[0]
    kn = kappa0 + n
    mn = (kappa0 * m0 + s) / kn
    nun = nu0 + n
    psin = psi0 + ss + kappa0 * np.outer(m0, m0) - kn * np.outer(mn, mn)
    psin = 0.5 * (psin + psin.T)
    dof = nun - d + 1.0
    shape = psin * ((kn + 1.0) / (kn * dof))
    chol = np.linalg.cholesky(shape)
    inv_chol = np.linalg.inv(chol)
    logdet = 0.0
    for j in range(d):
        logdet += 2.0 * math.log(chol[j, j])
    const = (
        math.lgamma(0.5 * (dof + d))
        - math.lgamma(0.5 * dof)
        - 0.5 * d * math.log(dof * math.pi)
        - 0.5 * logdet
    )
    return mn, inv_chol, dof, const


@njit(cache=True)
def _mv_logpred(y, loc, inv_chol, dof, const):
    d = y.shape[0]
    r = y - loc
    maha = 0.0
    for a in range(d):
        acc = 0.0
        for b in range(a + 1):
            acc += inv_chol[a, b] * r[b]
        maha += acc * acc
    return const - 0.5 * (dof + d) * math.log1p(maha / dof)


@njit(cache=True)
def mv_sweep(Y, z, counts, sums, outer, n_clusters, u, alpha, m0, kappa0, nu0, psi0, max_clusters):
    """Multivariate Normal-inverse-Wishart analogue of :func:`uni_sweep`."""
    N, d = Y.shape
    cap = counts.shape[0]
    loc = np.empty((cap, d))
    ichol = np.empty((cap, d, d))
    dof = np.empty(cap)
    const = np.empty(cap)
    for c in range(n_clusters):
        loc[c], ichol[c], dof[c], const[c] = _mv_pred_params(counts[c], sums[c], outer[c], m0, kappa0, nu0, psi0)
    zero_s = np.zeros(d)
    zero_ss = np.zeros((d, d))
    p_loc, p_ichol, p_dof, p_const = _mv_pred_params(0.0, zero_s, zero_ss, m0, kappa0, nu0, psi0)
    logw = np.empty(cap + 1)
    K = n_clusters
    for i in range(N):
        yi = Y[i]
        yy = np.outer(yi, yi)
        c = z[i]
        counts[c] -= 1
        sums[c] -= yi
        outer[c] -= yy
        if counts[c] == 0:
            last = K - 1
            if c != last:
                counts[c] = counts[last]
                sums[c, :] = sums[last, :]
                outer[c, :, :] = outer[last, :, :]
                loc[c, :] = loc[last, :]
                ichol[c, :, :] = ichol[last, :, :]
                dof[c] = dof[last]
                const[c] = const[last]
                for j in range(N):
                    if z[j] == last:
                        z[j] = c
            counts[last] = 0
            sums[last, :] = 0.0
            outer[last, :, :] = 0.0
            K -= 1
        else:
            loc[c], ichol[c], dof[c], const[c] = _mv_pred_params(
                counts[c], sums[c], outer[c], m0, kappa0, nu0, psi0
            )
        mx = -np.inf
        for q in range(K):
            logw[q] = math.log(counts[q]) + _mv_logpred(yi, loc[q], ichol[q], dof[q], const[q])
            if logw[q] > mx:
                mx = logw[q]
        n_opts = K
        if K < max_clusters:
            logw[K] = math.log(alpha) + _mv_logpred(yi, p_loc, p_ichol, p_dof, p_const)
            if logw[K] > mx:
                mx = logw[K]
            n_opts = K + 1
        total = 0.0
        for q in range(n_opts):
            logw[q] = math.exp(logw[q] - mx)
            total += logw[q]
        target = u[i] * total
        acc = 0.0
        new = n_opts - 1
        for q in range(n_opts):
            acc += logw[q]
            if target < acc:
                new = q
                break
        if new == K:
            K += 1
        z[i] = new
        counts[new] += 1
        sums[new] += yi
        outer[new] += yy
        loc[new], ichol[new], dof[new], const[new] = _mv_pred_params(
            counts[new], sums[new], outer[new], m0, kappa0, nu0, psi0
        )
    return K
