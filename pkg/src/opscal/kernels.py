"""Hot sequential kernels: online Newton passes, tracking, hedging.

These are the per-step loops that dominate experiment runtime. Each is a
plain function JIT-compiled by numba unless ``OPSCAL_NUMBA=0`` (see
``opscal._accel``); the un-jitted fallbacks execute the identical code, so
the two paths produce bit-identical outputs.

Conventions:
  - features are (T, d) float64 with a trailing bias column of ones
  - outcomes are float64 0.0/1.0
  - ``us`` are pre-drawn Uniform[0,1) variates, one per time step; hedging
    consumes exactly one per step whether or not it randomizes, so seeded
    replays align across step-by-step and whole-stream execution
  - bins are 0-based here (the public API is 1-based); bin width ``eps``
    and count ``m`` are passed explicitly and must come from the same
    BinningScheme the caller uses for metrics
"""

from __future__ import annotations

import math

import numpy as np

from ._accel import maybe_jit


def _project_anorm(A, theta_tilde, radius):
    # argmin over the radius-ball of (theta_tilde - theta)^T A (theta_tilde - theta),
    # via eigendecomposition of A and bisection on the KKT multiplier.
    d = theta_tilde.shape[0]
    nrm2 = 0.0
    for i in range(d):
        nrm2 += theta_tilde[i] * theta_tilde[i]
    if nrm2 <= radius * radius:
        return theta_tilde.copy()
    w, Q = np.linalg.eigh(A)
    v = np.zeros(d)
    for j in range(d):
        s = 0.0
        for i in range(d):
            s += Q[i, j] * theta_tilde[i]
        v[j] = s
    # ||theta(lam)||^2 = sum_i (w_i v_i / (w_i + lam))^2 is strictly
    # decreasing in lam >= 0, from ||theta_tilde|| down to 0.
    lo = 0.0
    hi = 1.0
    while hi < 1e300:
        s = 0.0
        for i in range(d):
            zi = w[i] * v[i] / (w[i] + hi)
            s += zi * zi
        if s < radius * radius:
            break
        hi *= 2.0
    lam = hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        s = 0.0
        for i in range(d):
            zi = w[i] * v[i] / (w[i] + mid)
            s += zi * zi
        nrm = math.sqrt(s)
        lam = mid
        if abs(nrm - radius) <= 1e-10:
            break
        if nrm > radius:
            lo = mid
        else:
            hi = mid
    z = np.zeros(d)
    for i in range(d):
        z[i] = w[i] * v[i] / (w[i] + lam)
    out = np.zeros(d)
    for i in range(d):
        s = 0.0
        for j in range(d):
            s += Q[i, j] * z[j]
        out[i] = s
    return out


def _ons_step_arrays(theta, A, Ainv, x, y, gamma, radius):
    # One online-Newton step, in place. Returns the forecast made with the
    # PRE-update theta. A accumulates grad grad^T; Ainv tracks A^{-1} by
    # Sherman-Morrison so the hot path never solves a linear system.
    d = theta.shape[0]
    z = 0.0
    for i in range(d):
        z += theta[i] * x[i]
    if z >= 0.0:
        p = 1.0 / (1.0 + math.exp(-z))
    else:
        ez = math.exp(z)
        p = ez / (1.0 + ez)
    r = p - y
    g = np.zeros(d)
    for i in range(d):
        g[i] = r * x[i]
    for i in range(d):
        for j in range(d):
            A[i, j] += g[i] * g[j]
    v = np.zeros(d)
    for i in range(d):
        s = 0.0
        for j in range(d):
            s += Ainv[i, j] * g[j]
        v[i] = s
    denom = 1.0
    for i in range(d):
        denom += g[i] * v[i]
    for i in range(d):
        for j in range(d):
            Ainv[i, j] -= v[i] * v[j] / denom
    # (A + g g^T)^{-1} g == v / denom, the updated-inverse Newton direction
    tnorm2 = 0.0
    tt = np.zeros(d)
    for i in range(d):
        tt[i] = theta[i] - (v[i] / denom) / gamma
        tnorm2 += tt[i] * tt[i]
    if tnorm2 <= radius * radius:
        for i in range(d):
            theta[i] = tt[i]
    else:
        proj = project_anorm(A, tt, radius)
        for i in range(d):
            theta[i] = proj[i]
    return p


def _ons_pass(feats, ys, gamma, rho, radius, theta0):
    # Full online-Newton pass. Returns per-step forecasts (made with the
    # pre-update parameters) and the parameter trace: thetas[t] is the
    # parameter vector IN FORCE at step t (0-based), thetas[T] the final.
    T, d = feats.shape
    theta = theta0.copy()
    A = np.zeros((d, d))
    Ainv = np.zeros((d, d))
    for i in range(d):
        A[i, i] = rho
        Ainv[i, i] = 1.0 / rho
    probs = np.zeros(T)
    thetas = np.zeros((T + 1, d))
    thetas[0] = theta
    for t in range(T):
        probs[t] = ons_step_arrays(theta, A, Ainv, feats[t], ys[t], gamma, radius)
        thetas[t + 1] = theta
    return probs, thetas


def _tracking_pass(expert, ys, eps, m):
    # Per-bin past-outcome averages of the expert's bin; midpoint when the
    # bin has no history yet. State sees strictly-past steps only.
    T = expert.shape[0]
    counts = np.zeros(m)
    sums = np.zeros(m)
    out = np.zeros(T)
    for t in range(T):
        b = int(math.floor(expert[t] / eps))
        if b >= m:
            b = m - 1
        if counts[b] > 0.0:
            out[t] = sums[b] / counts[b]
        else:
            out[t] = (b + 0.5) * eps
        counts[b] += 1.0
        sums[b] += ys[t]
    return out


def _f99_dist_row(counts, sums, eps, m):
    # Hedging distribution for one forecaster instance. Returns
    # (lo_mid, hi_mid, prob_lo): a point mass has hi_mid == lo_mid and
    # prob_lo == 1. Condition A (some bin's observed average sits inside
    # the bin) gives a deterministic midpoint forecast; otherwise some
    # adjacent (excess, deficit) pair exists and we hedge between their
    # midpoints. Smallest index wins in both cases.
    for b in range(m):
        if counts[b] == 0.0:
            pb = (b + 0.5) * eps
        else:
            pb = sums[b] / counts[b]
        if pb >= b * eps and pb <= (b + 1.0) * eps:
            mid = (b + 0.5) * eps
            return mid, mid, 1.0
    for b in range(m - 1):
        if counts[b] == 0.0:
            pb = (b + 0.5) * eps
        else:
            pb = sums[b] / counts[b]
        eb = pb - (b + 1.0) * eps
        if eb > 0.0:
            if counts[b + 1] == 0.0:
                pb1 = (b + 1.5) * eps
            else:
                pb1 = sums[b + 1] / counts[b + 1]
            db1 = (b + 1.0) * eps - pb1
            if db1 > 0.0:
                lo = (b + 0.5) * eps
                hi = (b + 1.5) * eps
                return lo, hi, db1 / (db1 + eb)
    raise RuntimeError("hedging invariant violated: neither condition holds")


def _hops_pass(expert, ys, us, eps, m):
    # One independent hedging forecaster per expert bin; each sees only the
    # outcome subsequence routed to it. us[t] resolves the (possible)
    # randomization at step t.
    T = expert.shape[0]
    counts = np.zeros((m, m))
    sums = np.zeros((m, m))
    out = np.zeros(T)
    for t in range(T):
        r = int(math.floor(expert[t] / eps))
        if r >= m:
            r = m - 1
        lo, hi, plo = f99_dist_row(counts[r], sums[r], eps, m)
        if us[t] < plo:
            chosen = lo
        else:
            chosen = hi
        out[t] = chosen
        c = int(math.floor(chosen / eps))
        if c >= m:
            c = m - 1
        counts[r, c] += 1.0
        sums[r, c] += ys[t]
    return out


def _ops_adversarial_pass(feats, gamma, rho, radius, theta0):
    # Deterministic forecaster versus the outcome adversary y = 1{p <= 0.5}.
    T, d = feats.shape
    theta = theta0.copy()
    A = np.zeros((d, d))
    Ainv = np.zeros((d, d))
    for i in range(d):
        A[i, i] = rho
        Ainv[i, i] = 1.0 / rho
    probs = np.zeros(T)
    ys = np.zeros(T)
    for t in range(T):
        z = 0.0
        for i in range(d):
            z += theta[i] * feats[t, i]
        if z >= 0.0:
            p = 1.0 / (1.0 + math.exp(-z))
        else:
            ez = math.exp(z)
            p = ez / (1.0 + ez)
        y = 1.0 if p <= 0.5 else 0.0
        ons_step_arrays(theta, A, Ainv, feats[t], y, gamma, radius)
        probs[t] = p
        ys[t] = y
    return probs, ys


def _hops_adversarial_pass(feats, us, eps, m, gamma, rho, radius, theta0):
    # Joint pass: online scaler + hedging, against an adversary that sees
    # the announced hedge distribution (not the draw) and sets
    # y = 1{mean(distribution) <= 0.5}. The draw happens after y is fixed.
    T, d = feats.shape
    theta = theta0.copy()
    A = np.zeros((d, d))
    Ainv = np.zeros((d, d))
    for i in range(d):
        A[i, i] = rho
        Ainv[i, i] = 1.0 / rho
    counts = np.zeros((m, m))
    sums = np.zeros((m, m))
    ops = np.zeros(T)
    hops = np.zeros(T)
    ys = np.zeros(T)
    for t in range(T):
        z = 0.0
        for i in range(d):
            z += theta[i] * feats[t, i]
        if z >= 0.0:
            p = 1.0 / (1.0 + math.exp(-z))
        else:
            ez = math.exp(z)
            p = ez / (1.0 + ez)
        r = int(math.floor(p / eps))
        if r >= m:
            r = m - 1
        lo, hi, plo = f99_dist_row(counts[r], sums[r], eps, m)
        mean = plo * lo + (1.0 - plo) * hi
        y = 1.0 if mean <= 0.5 else 0.0
        if us[t] < plo:
            chosen = lo
        else:
            chosen = hi
        c = int(math.floor(chosen / eps))
        if c >= m:
            c = m - 1
        counts[r, c] += 1.0
        sums[r, c] += y
        ons_step_arrays(theta, A, Ainv, feats[t], y, gamma, radius)
        ops[t] = p
        hops[t] = chosen
        ys[t] = y
    return ops, hops, ys


# plain-Python references (benchmark baseline; bit-identical results)
project_anorm_py = _project_anorm
ons_step_arrays_py = _ons_step_arrays
ons_pass_py = _ons_pass
tracking_pass_py = _tracking_pass
f99_dist_row_py = _f99_dist_row
hops_pass_py = _hops_pass
ops_adversarial_pass_py = _ops_adversarial_pass
hops_adversarial_pass_py = _hops_adversarial_pass

# jitted (or fallback) exports; passes resolve these globals, so the whole
# call graph is compiled together when numba is on
project_anorm = maybe_jit(_project_anorm)
ons_step_arrays = maybe_jit(_ons_step_arrays)
ons_pass = maybe_jit(_ons_pass)
tracking_pass = maybe_jit(_tracking_pass)
f99_dist_row = maybe_jit(_f99_dist_row)
hops_pass = maybe_jit(_hops_pass)
ops_adversarial_pass = maybe_jit(_ops_adversarial_pass)
hops_adversarial_pass = maybe_jit(_hops_adversarial_pass)
