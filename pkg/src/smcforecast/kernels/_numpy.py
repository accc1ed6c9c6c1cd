"""Vectorised numpy implementations of the particle kernels.

Every function here has a twin in ``_numba`` with the same signature.
The two agree to rounding: numpy reductions are pairwise, numba's are
sequential.  Arrays are batched
as ``(B, N)``: ``B`` independent filters with ``N`` particles each.
"""
import numpy as np

EXP_CLAMP = 700.0
LOG_2PI = float(np.log(2.0 * np.pi))


def logsumexp(a):
    m = np.max(a)
    if not np.isfinite(m):
        return m
    return m + np.log(np.sum(np.exp(a - m)))


def sv_initial(mu, phi, sigma_sq, eps):
    return mu + np.sqrt(sigma_sq / (1.0 - phi * phi)) * eps


def sv_transition_mean(mu, phi, sigma_sq, rho, x_prev, y_prev):
    lev = np.exp(-0.5 * np.clip(x_prev, -EXP_CLAMP, EXP_CLAMP))
    return mu + phi * (x_prev - mu) + rho * np.sqrt(sigma_sq) * lev * y_prev


def sv_propagate(mu, phi, sigma_sq, rho, x_prev, y_prev, eps):
    mean = sv_transition_mean(mu, phi, sigma_sq, rho, x_prev, y_prev)
    return mean + np.sqrt(sigma_sq * (1.0 - rho * rho)) * eps


def sv_obs_logpdf(y, x):
    return -0.5 * (LOG_2PI + x + y * y * np.exp(-np.clip(x, -EXP_CLAMP, EXP_CLAMP)))


def _search_row(logw, u, m):
    cdf = np.cumsum(np.exp(logw - m))
    idx = np.searchsorted(cdf, u * cdf[-1], side="right")
    return np.minimum(idx, logw.shape[0] - 1)


def multinomial_indices(logw, u):
    """Independent categorical draws per row by inverse-CDF lookup of ``u``."""
    B, N = logw.shape
    idx = np.empty((B, N), dtype=np.int64)
    for b in range(B):
        m = np.max(logw[b])
        if not np.isfinite(m):
            idx[b] = np.arange(N)
            continue
        idx[b] = _search_row(logw[b], u[b], m)
    return idx


def reweight_resample(logw_prev, loginc, x, u, threshold):
    """Fold incremental weights into mean-one carried weights and resample.

    Returns ``(logw_new, idx, log_evidence, mean, ess, resampled)``.  A row
    whose weights are all zero comes back with ``log_evidence = -inf`` and
    ``ess = 0``; the caller decides whether that is fatal.
    """
    B, N = logw_prev.shape
    logN = np.log(N)
    logw = logw_prev + loginc
    logw[np.isnan(logw)] = -np.inf
    m = np.max(logw, axis=1)
    alive = np.isfinite(m)
    shift = np.where(alive, m, 0.0)
    w = np.exp(logw - shift[:, None])
    s = np.sum(w, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_norm = shift + np.log(s)
        log_ev = np.where(alive, log_norm - logN, -np.inf)
        mean = np.where(alive, np.sum(w * x, axis=1) / s, np.nan)
        ess = np.where(alive, s * s / np.sum(w * w, axis=1), 0.0)
        logw_new = np.where(alive[:, None], logw - (log_norm - logN)[:, None], logw)
    resampled = alive & ((threshold >= 1.0) | (ess < threshold * N))
    idx = np.broadcast_to(np.arange(N), (B, N)).copy()
    for b in np.flatnonzero(resampled):
        cdf = np.cumsum(w[b])
        idx[b] = np.minimum(np.searchsorted(cdf, u[b] * cdf[-1], side="right"), N - 1)
        logw_new[b] = 0.0
    return logw_new, idx, log_ev, mean, ess, resampled


def sv_bootstrap_loglik(y, mu, phi, sigma_sq, rho, normals, uniforms, threshold):
    """Total log-likelihood of ``B`` bootstrap filters run over ``y``.

    ``normals`` and ``uniforms`` have shape ``(T, B, N)``.  Rows that
    degenerate return ``-inf`` and are not advanced further.
    """
    T, B, N = normals.shape
    total = np.zeros(B)
    x = sv_initial(mu, phi, sigma_sq, normals[0])
    logw = np.zeros((B, N))
    for t in range(T):
        if t > 0:
            x = sv_propagate(mu, phi, sigma_sq, rho, x, y[t - 1], normals[t])
        loginc = sv_obs_logpdf(y[t], x)
        logw, idx, log_ev, _, _, _ = reweight_resample(logw, loginc, x, uniforms[t], threshold)
        total += log_ev
        x = np.take_along_axis(x, idx, axis=1)
        dead = ~np.isfinite(log_ev)
        if dead.any():
            logw[dead] = 0.0
            x[dead] = 0.0
    return total
