"""Chain and forecast diagnostics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ParameterSummary:
    name: str
    mean: float
    sd: float
    lower: float
    upper: float


def _as_chains(chains) -> np.ndarray:
    c = np.asarray(chains, dtype=float)
    if c.ndim == 2:
        c = c[:, :, None]
    if c.ndim != 3:
        raise ValueError("chains must be (n_chains, n_draws) or (n_chains, n_draws, n_params)")
    return c


def rhat(chains, split=True) -> np.ndarray:
    """Potential scale reduction factor, one value per parameter.

    Parameters
    ----------
    chains : array_like
        ``(M, n)`` or ``(M, n, d)``; equal-length chains.
    split : bool
        Halve every chain first (an odd middle draw is dropped), which
        also catches drift within a single chain.

    Returns
    -------
    ndarray of shape (d,)
        Floored at 1: the unfloored estimator can dip just below 1 when the
        between-chain spread is smaller than its expectation.
    """
    c = _as_chains(chains)
    M, n, _ = c.shape
    if M < 2:
        raise ValueError("R-hat needs at least 2 chains")
    if n < 4:
        raise ValueError("R-hat needs chains of length >= 4")
    if split:
        h = n // 2
        c = np.concatenate([c[:, :h], c[:, n - h:]], axis=0)
        M, n = c.shape[0], h
    means = c.mean(axis=1)
    within = c.var(axis=1, ddof=1).mean(axis=0)
    if np.any(within <= 0.0):
        raise ValueError("zero within-chain variance")
    between = n * means.var(axis=0, ddof=1)
    var_plus = (n - 1) / n * within + between / n
    return np.maximum(np.sqrt(var_plus / within), 1.0)


def acf(series, max_lag) -> np.ndarray:
    """Sample autocorrelations at lags 0..max_lag (biased, correlogram convention)."""
    x = np.asarray(series, dtype=float)
    n = x.shape[0]
    if not 0 <= max_lag < n:
        raise ValueError("need 0 <= max_lag < len(series)")
    d = x - x.mean()
    c0 = d @ d
    if c0 <= 0.0:
        raise ValueError("constant series has no autocorrelation")
    return np.array([d[: n - k] @ d[k:] / c0 for k in range(max_lag + 1)])


def posterior_summary(samples, names=None, level=0.95) -> list[ParameterSummary]:
    """Means and central credible intervals (type-7 quantiles) per column."""
    s = np.asarray(samples, dtype=float)
    if s.ndim == 1:
        s = s[:, None]
    if s.shape[0] == 0:
        raise ValueError("no samples")
    names = names or [f"p{j}" for j in range(s.shape[1])]
    tail = (1.0 - level) / 2.0
    lo, hi = np.quantile(s, [tail, 1.0 - tail], axis=0, method="linear")
    sd = s.std(axis=0, ddof=1) if s.shape[0] > 1 else np.zeros(s.shape[1])
    return [ParameterSummary(str(nm), float(m), float(v), float(a), float(b))
            for nm, m, v, a, b in zip(names, s.mean(axis=0), sd, lo, hi)]


def batch_means_se(series, n_batches=None) -> float:
    """Monte Carlo standard error of a chain mean by non-overlapping batch means.

    The default uses about sqrt(n) batches of about sqrt(n) draws.
    """
    x = np.asarray(series, dtype=float)
    n = x.shape[0]
    b = int(n_batches) if n_batches else int(np.sqrt(n))
    if b < 2:
        raise ValueError("need at least 2 batches")
    size = n // b
    if size < 1:
        raise ValueError("more batches than draws")
    means = x[: b * size].reshape(b, size).mean(axis=1)
    return float(np.sqrt(means.var(ddof=1) / b))


def cumulative_log_evidence(records) -> np.ndarray:
    """Running sum of log conditional evidences.

    Accepts FilterRecord objects or plain numbers.
    """
    vals = [getattr(r, "log_cond_evidence", r) for r in records]
    return np.cumsum(np.asarray(vals, dtype=float))


def simplex_series(streams) -> np.ndarray:
    """Per-time relative evidences across algorithms.

    Parameters
    ----------
    streams : sequence of array_like
        K >= 2 equal-length log conditional-evidence streams.

    Returns
    -------
    ndarray of shape (T, K)
        Row t is proportional to exp(streams[:, t]) and sums to one.
    """
    arrs = [np.asarray(s, dtype=float).reshape(-1) for s in streams]
    if len({a.shape[0] for a in arrs}) > 1:
        raise ValueError("evidence streams differ in length")
    lev = np.asarray(arrs)
    if lev.ndim != 2 or lev.shape[0] < 2:
        raise ValueError("need at least 2 equal-length evidence streams")
    rows = np.ascontiguousarray(lev.T)
    top = rows.max(axis=1, keepdims=True)
    if np.any(~np.isfinite(top)):
        bad = int(np.flatnonzero(~np.isfinite(top[:, 0]))[0])
        raise ValueError(f"no finite evidence at row {bad}")
    w = np.exp(rows - top)
    return w / w.sum(axis=1, keepdims=True)

