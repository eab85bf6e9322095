"""Compiled inner loops: cell probabilities, DPD loss and a Nelder-Mead search.

Everything here works on plain float arrays so the Monte Carlo code can run
hundreds of thousands of fits on a single core.  The public, validated API
lives in :mod:`oneshot_dpd.model`, :mod:`oneshot_dpd.dpd` and
:mod:`oneshot_dpd.estimators`.
"""

import math

import numpy as np
from numba import njit

# parametrisation modes of the search coordinates
FREE = 0  # (log-rate at mean stress, scaled theta1)
LINE_THETA0 = 1  # |m1| >= |m0|: free log(theta0), theta1 from the constraint
LINE_THETA1 = 2  # |m0| > |m1|: free scaled theta1, theta0 from the constraint


@njit(cache=True)
def exposure(theta0, theta1, x, tau, t):
    """Cumulative exposure E(t) with G_T(t) = 1 - exp(-E(t)), for every t."""
    k = x.shape[0]
    lam = np.empty(k)
    shift = np.empty(k)
    acc = 0.0
    prev = 0.0
    for i in range(k):
        lam[i] = theta0 * math.exp(theta1 * x[i])
        shift[i] = acc / lam[i] if lam[i] > 0.0 else 0.0
        acc += (tau[i] - prev) * lam[i]
        prev = tau[i]
    out = np.empty(t.shape[0])
    for j in range(t.shape[0]):
        tj = t[j]
        i = 0
        while i < k - 1 and tau[i] <= tj:
            i += 1
        start = tau[i - 1] if i > 0 else 0.0
        out[j] = lam[i] * (tj + shift[i] - start)
    return out


@njit(cache=True)
def cell_probs(theta0, theta1, x, tau, t):
    expo = exposure(theta0, theta1, x, tau, t)
    L = t.shape[0]
    out = np.empty(L + 1)
    prev = 0.0
    for j in range(L):
        g = -math.expm1(-expo[j])
        out[j] = g - prev
        prev = g
    out[L] = math.exp(-expo[L - 1])
    return out


@njit(cache=True)
def dpd_loss(p, q, beta):
    """Density power divergence; exact Kullback-Leibler branch at beta == 0."""
    s = 0.0
    if beta == 0.0:
        for j in range(p.shape[0]):
            if p[j] > 0.0:
                if q[j] <= 0.0:
                    return np.inf
                s += p[j] * math.log(p[j] / q[j])
        return s
    c = 1.0 + 1.0 / beta
    for j in range(p.shape[0]):
        qj = q[j] if q[j] > 0.0 else 0.0
        s += qj ** (1.0 + beta)
        if p[j] > 0.0:
            s += -c * p[j] * qj**beta + p[j] ** (1.0 + beta) / beta
    return s


@njit(cache=True)
def to_theta(eta, mode, xbar, scale, m0, m1, d):
    if mode == FREE:
        th1 = eta[1] / scale
        return math.exp(eta[0] - th1 * xbar), th1
    if mode == LINE_THETA0:
        th0 = math.exp(eta[0])
        return th0, (d - m0 * th0) / m1
    th1 = eta[0] / scale
    return (d - m1 * th1) / m0, th1


@njit(cache=True)
def objective(eta, p, beta, x, tau, t, mode, xbar, scale, m0, m1, d):
    th0, th1 = to_theta(eta, mode, xbar, scale, m0, m1, d)
    if not (th0 > 0.0) or not math.isfinite(th0) or not math.isfinite(th1):
        return np.inf
    q = cell_probs(th0, th1, x, tau, t)
    for j in range(q.shape[0]):
        if not math.isfinite(q[j]):
            return np.inf
    val = dpd_loss(p, q, beta)
    if not math.isfinite(val):
        return np.inf
    return val


@njit(cache=True)
def nelder_mead(x0, step, p, beta, x, tau, t, mode, xbar, scale, m0, m1, d,
                xatol, fatol, max_iter):
    """Standard Nelder-Mead; returns (best, fbest, iterations, converged)."""
    n = x0.shape[0]
    sim = np.empty((n + 1, n))
    fs = np.empty(n + 1)
    sim[0] = x0
    for i in range(n):
        sim[i + 1] = x0
        sim[i + 1, i] += step
    for i in range(n + 1):
        fs[i] = objective(sim[i], p, beta, x, tau, t, mode, xbar, scale, m0, m1, d)

    it = 0
    converged = False
    while it < max_iter:
        order = np.argsort(fs)
        sim = sim[order]
        fs = fs[order]
        xspread = 0.0
        fspread = 0.0
        for i in range(1, n + 1):
            for c in range(n):
                xspread = max(xspread, abs(sim[i, c] - sim[0, c]))
            fspread = max(fspread, abs(fs[i] - fs[0]))
        if xspread <= xatol and fspread <= fatol:
            converged = True
            break
        it += 1

        cen = np.zeros(n)
        for i in range(n):
            cen += sim[i]
        cen /= n
        xr = 2.0 * cen - sim[n]
        fr = objective(xr, p, beta, x, tau, t, mode, xbar, scale, m0, m1, d)
        if fr < fs[0]:
            xe = 3.0 * cen - 2.0 * sim[n]
            fe = objective(xe, p, beta, x, tau, t, mode, xbar, scale, m0, m1, d)
            if fe < fr:
                sim[n] = xe
                fs[n] = fe
            else:
                sim[n] = xr
                fs[n] = fr
            continue
        if fr < fs[n - 1]:
            sim[n] = xr
            fs[n] = fr
            continue
        shrink = False
        if fr < fs[n]:
            xc = 1.5 * cen - 0.5 * sim[n]
            fc = objective(xc, p, beta, x, tau, t, mode, xbar, scale, m0, m1, d)
            if fc <= fr:
                sim[n] = xc
                fs[n] = fc
            else:
                shrink = True
        else:
            xcc = 0.5 * cen + 0.5 * sim[n]
            fcc = objective(xcc, p, beta, x, tau, t, mode, xbar, scale, m0, m1, d)
            if fcc < fs[n]:
                sim[n] = xcc
                fs[n] = fcc
            else:
                shrink = True
        if shrink:
            for i in range(1, n + 1):
                sim[i] = sim[0] + 0.5 * (sim[i] - sim[0])
                fs[i] = objective(sim[i], p, beta, x, tau, t, mode, xbar, scale,
                                  m0, m1, d)

    order = np.argsort(fs)
    return sim[order[0]].copy(), fs[order[0]], it, converged


@njit(cache=True)
def grid_values(grid, p, beta, x, tau, t, mode, xbar, scale, m0, m1, d):
    out = np.empty(grid.shape[0])
    for i in range(grid.shape[0]):
        out[i] = objective(grid[i], p, beta, x, tau, t, mode, xbar, scale, m0, m1, d)
    return out
