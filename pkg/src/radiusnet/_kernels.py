"""Compiled inner loops for likelihood evaluation and Metropolis sweeps.

Global parameters travel as a length-3 array ``[alpha, gamma, phi]``. Prior
hyperparameters travel as a (4, 3) array with rows alpha, gamma, phi, radius
and columns ``mu, sigma, log_normaliser``.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def log_sigmoid(x):
    if x >= 0.0:
        return -math.log1p(math.exp(-x))
    return x - math.log1p(math.exp(x))


@njit(cache=True)
def beta(ci, cj, phi):
    if ci == 0 or cj == 0:
        return 0.0
    if ci == cj:
        return phi
    return -phi


@njit(cache=True)
def tn_logpdf(x, prior, k):
    if x <= 0.0:
        return -np.inf
    z = (x - prior[k, 0]) / prior[k, 1]
    return -0.5 * z * z - prior[k, 2]


@njit(cache=True)
def full_loglik(D, A, PAM, r, c, alpha, gamma, phi, comms):
    n = r.shape[0]
    total = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            eta = (r[i] + r[j] - D[i, j]) / alpha + PAM[i, j] / gamma
            if comms:
                eta += beta(c[i], c[j], phi)
            if A[i, j]:
                total += log_sigmoid(eta)
            else:
                total += log_sigmoid(-eta)
    return total


@njit(cache=True)
def row_loglik(i, ri, ci, D, A, PAM, r, c, alpha, gamma, phi, comms):
    """Row ``i`` with ``r[i]`` and ``c[i]`` replaced by ``ri`` and ``ci``."""
    n = r.shape[0]
    total = 0.0
    for j in range(n):
        if j == i:
            continue
        eta = (ri + r[j] - D[i, j]) / alpha + PAM[i, j] / gamma
        if comms:
            eta += beta(ci, c[j], phi)
        if A[i, j]:
            total += log_sigmoid(eta)
        else:
            total += log_sigmoid(-eta)
    return total


@njit(cache=True)
def log_prior(theta, r, c, prior, log_theta, comms):
    total = tn_logpdf(theta[0], prior, 0) + tn_logpdf(theta[1], prior, 1)
    if comms:
        total += tn_logpdf(theta[2], prior, 2)
        for i in range(c.shape[0]):
            total += log_theta[c[i]]
    for i in range(r.shape[0]):
        total += tn_logpdf(r[i], prior, 3)
    return total


@njit(cache=True)
def _accept(ratio, u):
    if ratio >= 0.0:
        return True
    return u == 0.0 or math.log(u) < ratio


@njit(cache=True)
def sweep(D, A, PAM, r, c, theta, prior, log_theta, prop,
          zg, ug, zr, ur, lo, ul, upd_g, upd_r, upd_c, comms):
    """One Metropolis-within-Gibbs sweep, updating ``r``, ``c``, ``theta`` in place.

    Returns the log-likelihood after the sweep and the accept counts of the
    global block, the radius moves and the label moves.
    """
    n = r.shape[0]
    ll = full_loglik(D, A, PAM, r, c, theta[0], theta[1], theta[2], comms)
    acc_g = 0
    acc_r = 0
    acc_c = 0

    any_g = False
    for p in range(3):
        if upd_g[p]:
            any_g = True
    if any_g:
        new = theta.copy()
        ok = True
        for p in range(3):
            if upd_g[p]:
                new[p] = theta[p] + prop[p] * zg[p]
                if new[p] <= 0.0:
                    ok = False
        if ok:
            ll_new = full_loglik(D, A, PAM, r, c, new[0], new[1], new[2], comms)
            ratio = ll_new - ll
            for p in range(3):
                if upd_g[p]:
                    ratio += tn_logpdf(new[p], prior, p) - tn_logpdf(theta[p], prior, p)
            if _accept(ratio, ug):
                for p in range(3):
                    theta[p] = new[p]
                ll = ll_new
                acc_g = 1

    alpha = theta[0]
    gamma = theta[1]
    phi = theta[2]
    if upd_r:
        for i in range(n):
            rn = r[i] + prop[3] * zr[i]
            if rn <= 0.0:
                continue
            old = row_loglik(i, r[i], c[i], D, A, PAM, r, c, alpha, gamma, phi, comms)
            newv = row_loglik(i, rn, c[i], D, A, PAM, r, c, alpha, gamma, phi, comms)
            ratio = newv - old + tn_logpdf(rn, prior, 3) - tn_logpdf(r[i], prior, 3)
            if _accept(ratio, ur[i]):
                r[i] = rn
                ll += newv - old
                acc_r += 1

    if comms and upd_c:
        k1 = log_theta.shape[0]
        for i in range(n):
            cn = (c[i] + lo[i]) % k1
            if cn == c[i]:
                continue
            old = row_loglik(i, r[i], c[i], D, A, PAM, r, c, alpha, gamma, phi, comms)
            newv = row_loglik(i, r[i], cn, D, A, PAM, r, c, alpha, gamma, phi, comms)
            ratio = newv - old + log_theta[cn] - log_theta[c[i]]
            if _accept(ratio, ul[i]):
                c[i] = cn
                ll += newv - old
                acc_c += 1
    return ll, acc_g, acc_r, acc_c


@njit(cache=True)
def predictive_probs(D, PAM, I, J, alphas, gammas, phis, radii, labels, comms, use_map, k):
    """Mean link probability over samples for pairs ``(I[m], J[m])``.

    With ``use_map`` only sample ``k`` is used.
    """
    m = I.shape[0]
    out = np.zeros(m)
    s0 = k if use_map else 0
    s1 = k + 1 if use_map else alphas.shape[0]
    for s in range(s0, s1):
        for q in range(m):
            i = I[q]
            j = J[q]
            eta = (radii[s, i] + radii[s, j] - D[i, j]) / alphas[s] + PAM[i, j] / gammas[s]
            if comms:
                eta += beta(labels[s, i], labels[s, j], phis[s])
            out[q] += math.exp(log_sigmoid(eta))
    return out / (s1 - s0)
