"""numba-compiled particle kernels.

Mirrors ``_numpy`` function for function.  Parameter arguments are
``(B, N)`` float64 arrays, one value per particle.
"""
import math

import numpy as np
from numba import njit

EXP_CLAMP = 700.0
LOG_2PI = math.log(2.0 * math.pi)

_opts = dict(cache=True, nogil=True, error_model="numpy")


@njit(**_opts)
def _clamp(v):
    if v > EXP_CLAMP:
        return EXP_CLAMP
    if v < -EXP_CLAMP:
        return -EXP_CLAMP
    return v


@njit(**_opts)
def logsumexp(a):
    m = -np.inf
    for v in a.ravel():
        if v > m:
            m = v
    if not np.isfinite(m):
        return m
    s = 0.0
    for v in a.ravel():
        s += math.exp(v - m)
    return m + math.log(s)


@njit(**_opts)
def sv_initial(mu, phi, sigma_sq, eps):
    B, N = eps.shape
    out = np.empty((B, N))
    for b in range(B):
        for i in range(N):
            p = phi[b, i]
            out[b, i] = mu[b, i] + math.sqrt(sigma_sq[b, i] / (1.0 - p * p)) * eps[b, i]
    return out


@njit(**_opts)
def _sv_mean(mu, phi, sigma_sq, rho, x, y_prev):
    lev = math.exp(-0.5 * _clamp(x))
    return mu + phi * (x - mu) + rho * math.sqrt(sigma_sq) * lev * y_prev


@njit(**_opts)
def sv_transition_mean(mu, phi, sigma_sq, rho, x_prev, y_prev):
    B, N = x_prev.shape
    out = np.empty((B, N))
    for b in range(B):
        for i in range(N):
            out[b, i] = _sv_mean(mu[b, i], phi[b, i], sigma_sq[b, i], rho[b, i],
                                 x_prev[b, i], y_prev)
    return out


@njit(**_opts)
def sv_propagate(mu, phi, sigma_sq, rho, x_prev, y_prev, eps):
    B, N = x_prev.shape
    out = np.empty((B, N))
    for b in range(B):
        for i in range(N):
            r = rho[b, i]
            s2 = sigma_sq[b, i]
            mean = _sv_mean(mu[b, i], phi[b, i], s2, r, x_prev[b, i], y_prev)
            out[b, i] = mean + math.sqrt(s2 * (1.0 - r * r)) * eps[b, i]
    return out


@njit(**_opts)
def _obs(y, x):
    return -0.5 * (LOG_2PI + x + y * y * math.exp(-_clamp(x)))


@njit(**_opts)
def sv_obs_logpdf(y, x):
    B, N = x.shape
    out = np.empty((B, N))
    for b in range(B):
        for i in range(N):
            out[b, i] = _obs(y, x[b, i])
    return out


@njit(**_opts)
def _search(cdf, target):
    # first index with cdf[k] > target
    lo = 0
    hi = cdf.shape[0]
    while lo < hi:
        mid = (lo + hi) // 2
        if cdf[mid] <= target:
            lo = mid + 1
        else:
            hi = mid
    if lo > cdf.shape[0] - 1:
        lo = cdf.shape[0] - 1
    return lo


@njit(**_opts)
def multinomial_indices(logw, u):
    B, N = logw.shape
    idx = np.empty((B, N), dtype=np.int64)
    cdf = np.empty(N)
    for b in range(B):
        m = -np.inf
        for i in range(N):
            if logw[b, i] > m:
                m = logw[b, i]
        if not np.isfinite(m):
            for i in range(N):
                idx[b, i] = i
            continue
        acc = 0.0
        for i in range(N):
            acc += math.exp(logw[b, i] - m)
            cdf[i] = acc
        for i in range(N):
            idx[b, i] = _search(cdf, u[b, i] * acc)
    return idx


@njit(**_opts)
def reweight_resample(logw_prev, loginc, x, u, threshold):
    B, N = logw_prev.shape
    logN = math.log(N)
    logw_new = np.empty((B, N))
    idx = np.empty((B, N), dtype=np.int64)
    log_ev = np.empty(B)
    mean = np.empty(B)
    ess = np.empty(B)
    resampled = np.zeros(B, dtype=np.bool_)
    w = np.empty(N)
    cdf = np.empty(N)
    for b in range(B):
        m = -np.inf
        for i in range(N):
            v = logw_prev[b, i] + loginc[b, i]
            if math.isnan(v):
                v = -np.inf
            logw_new[b, i] = v
            if v > m:
                m = v
        if not np.isfinite(m):
            log_ev[b] = -np.inf
            mean[b] = np.nan
            ess[b] = 0.0
            for i in range(N):
                idx[b, i] = i
            continue
        s = 0.0
        s2 = 0.0
        sx = 0.0
        for i in range(N):
            wi = math.exp(logw_new[b, i] - m)
            w[i] = wi
            s += wi
            s2 += wi * wi
            sx += wi * x[b, i]
            cdf[i] = s
        log_norm = m + math.log(s)
        log_ev[b] = log_norm - logN
        mean[b] = sx / s
        ess[b] = s * s / s2
        if threshold >= 1.0 or ess[b] < threshold * N:
            resampled[b] = True
            for i in range(N):
                idx[b, i] = _search(cdf, u[b, i] * s)
                logw_new[b, i] = 0.0
        else:
            shift = log_norm - logN
            for i in range(N):
                idx[b, i] = i
                logw_new[b, i] = logw_new[b, i] - shift
    return logw_new, idx, log_ev, mean, ess, resampled


@njit(**_opts)
def sv_bootstrap_loglik(y, mu, phi, sigma_sq, rho, normals, uniforms, threshold):
    T, B, N = normals.shape
    total = np.zeros(B)
    x = sv_initial(mu, phi, sigma_sq, normals[0])
    logw = np.zeros((B, N))
    for t in range(T):
        if t > 0:
            x = sv_propagate(mu, phi, sigma_sq, rho, x, y[t - 1], normals[t])
        loginc = sv_obs_logpdf(y[t], x)
        logw, idx, log_ev, _, _, _ = reweight_resample(logw, loginc, x, uniforms[t], threshold)
        xn = np.empty((B, N))
        for b in range(B):
            total[b] += log_ev[b]
            if np.isfinite(log_ev[b]):
                for i in range(N):
                    xn[b, i] = x[b, idx[b, i]]
            else:
                for i in range(N):
                    xn[b, i] = 0.0
                    logw[b, i] = 0.0
        x = xn
    return total
