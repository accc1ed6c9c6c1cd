"""Scalar linear-Gaussian state space model and its exact Kalman likelihood.

Used as a surrogate wherever a particle estimate needs an exact answer
to be checked against.  One free parameter, the autoregressive
coefficient ``a`` in (-1, 1), with a uniform prior:

    x_1 ~ N(m, q / (1 - a^2))
    x_t = m + a (x_{t-1} - m) + N(0, q)
    y_t = x_t + N(0, r)
"""
from __future__ import annotations

import math

import numpy as np

LOG_2PI = math.log(2.0 * math.pi)


def _normal_logpdf(v, mean, var):
    with np.errstate(over="ignore"):
        return -0.5 * (LOG_2PI + np.log(var) + (v - mean) ** 2 / var)


class LinearGaussianModel:
    name = "lgssm"
    n_params = 1
    param_names = ("a",)

    def __init__(self, q=0.5, r=1.0, m=0.0):
        self.q = float(q)
        self.r = float(r)
        self.m = float(m)

    def simulate(self, a, T, rng: np.random.Generator):
        x = np.empty(T)
        x[0] = self.m + math.sqrt(self.q / (1.0 - a * a)) * rng.standard_normal()
        for t in range(1, T):
            x[t] = self.m + a * (x[t - 1] - self.m) + math.sqrt(self.q) * rng.standard_normal()
        y = x + math.sqrt(self.r) * rng.standard_normal(T)
        return x, y

    def check(self, theta):
        theta = np.asarray(theta, dtype=float)
        if np.any(~(np.abs(theta[..., 0]) < 1.0)):
            raise ValueError("autoregressive coefficient must lie in (-1, 1)")

    def to_unconstrained(self, theta):
        return 2.0 * np.arctanh(np.asarray(theta, dtype=float))

    def from_unconstrained(self, z):
        return np.tanh(0.5 * np.asarray(z, dtype=float))

    def log_jacobian(self, z):
        u = 0.5 * np.asarray(z, dtype=float)[..., 0]
        au = np.abs(u)
        out = 2.0 * (math.log(2.0) - au - np.log1p(np.exp(-2.0 * au))) - math.log(2.0)
        return float(out) if np.ndim(out) == 0 else out

    def log_prior(self, theta):
        a = float(np.asarray(theta, dtype=float).reshape(-1)[0])
        return math.log(0.5) if abs(a) < 1.0 else -math.inf

    def log_prior_unconstrained(self, z):
        lp = self.log_prior(self.from_unconstrained(z))
        return lp + self.log_jacobian(z) if math.isfinite(lp) else -math.inf

    def sample_prior(self, rng, size=None):
        n = 1 if size is None else size
        out = rng.uniform(-1.0, 1.0, (n, 1))
        return out[0] if size is None else out

    # batched interface, params shape (1, B, N)
    def initial_sample(self, params, eps):
        a = params[0]
        return self.m + np.sqrt(self.q / (1.0 - a * a)) * eps

    def initial_moments(self, params):
        a = params[0]
        return np.full_like(a, self.m), self.q / (1.0 - a * a)

    def initial_logpdf(self, params, x):
        return _normal_logpdf(x, *self.initial_moments(params))

    def transition_mean(self, params, x_prev, y_prev):
        return self.m + params[0] * (x_prev - self.m)

    def transition_var(self, params):
        return np.full_like(params[0], self.q)

    def transition_sample(self, params, x_prev, y_prev, eps):
        return self.transition_mean(params, x_prev, y_prev) + math.sqrt(self.q) * eps

    def transition_logpdf(self, params, x_new, x_prev, y_prev):
        return _normal_logpdf(x_new, self.transition_mean(params, x_prev, y_prev), self.q)

    def obs_logpdf(self, params, y, x):
        return _normal_logpdf(y, x, self.r)


def kalman_loglik(model: LinearGaussianModel, a, y) -> float:
    """Exact log p(y_{1:T} | a) by the Kalman filter."""
    a = float(np.asarray(a, dtype=float).reshape(-1)[0])
    q, r, m = model.q, model.r, model.m
    mean, var = m, q / (1.0 - a * a)
    total = 0.0
    for obs in np.asarray(y, dtype=float):
        s = var + r
        total += -0.5 * (LOG_2PI + math.log(s) + (obs - mean) ** 2 / s)
        gain = var / s
        mean = mean + gain * (obs - mean)
        var = (1.0 - gain) * var
        mean = m + a * (mean - m)
        var = a * a * var + q
    return total


def kalman_filter_means(model: LinearGaussianModel, a, y) -> np.ndarray:
    """Exact E[x_t | y_{1:t}] for every t."""
    a = float(a)
    q, r, m = model.q, model.r, model.m
    mean, var = m, q / (1.0 - a * a)
    out = np.empty(len(y))
    for t, obs in enumerate(np.asarray(y, dtype=float)):
        gain = var / (var + r)
        mean = mean + gain * (obs - mean)
        var = (1.0 - gain) * var
        out[t] = mean
        mean = m + a * (mean - m)
        var = a * a * var + q
    return out
