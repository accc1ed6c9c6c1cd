"""Stochastic volatility model with leverage.

    y_t | x_t            ~ N(0, exp(x_t))
    x_1 | theta          ~ N(mu, sigma_sq / (1 - phi^2))
    x_t | x_{t-1}, y_{t-1} ~ N(mu + phi (x_{t-1} - mu)
                              + rho sigma exp(-x_{t-1} / 2) y_{t-1},
                              sigma_sq (1 - rho^2))

Parameter arrays use the column order ``(mu, phi, sigma_sq, rho)``.  The
unconstrained coordinates are ``(mu, logit((phi+1)/2), log sigma_sq,
logit((rho+1)/2))``; ``logit((p+1)/2)`` is computed as ``2 atanh(p)``,
which is the same map without the cancellation near zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels

PARAM_NAMES = ("mu", "phi", "sigma_sq", "rho")
LOG_2PI = math.log(2.0 * math.pi)
EXP_CLAMP = kernels.EXP_CLAMP

# prior hyperparameters
PHI_BETA = (20.0, 1.5)
MU_MEAN, MU_VAR = 0.0, 25.0
SIGMA_SQ_SHAPE, SIGMA_SQ_SCALE = 2.5, 0.025


class ConstraintError(ValueError):
    """A parameter vector lies outside the model's support."""


class SaturationError(FloatingPointError):
    """An exponent left the representable range and was not clamped."""


@dataclass(frozen=True)
class ParameterVector:
    mu: float
    phi: float
    sigma_sq: float
    rho: float

    def __post_init__(self):
        check_constraints(np.array([self.mu, self.phi, self.sigma_sq, self.rho]))

    def as_array(self) -> np.ndarray:
        return np.array([self.mu, self.phi, self.sigma_sq, self.rho], dtype=float)

    @classmethod
    def from_array(cls, a) -> "ParameterVector":
        a = np.asarray(a, dtype=float)
        if a.shape != (4,):
            raise ValueError(f"expected 4 parameters, got shape {a.shape}")
        return cls(*(float(v) for v in a))


def check_constraints(theta) -> None:
    """Raise ConstraintError unless every row of ``theta`` is in the support."""
    theta = np.asarray(theta, dtype=float)
    mu, phi, s2, rho = (theta[..., k] for k in range(4))
    bad = ~(np.isfinite(mu) & (np.abs(phi) < 1.0) & (s2 > 0.0) & np.isfinite(s2) & (np.abs(rho) < 1.0))
    if np.any(bad):
        raise ConstraintError(
            f"parameters outside support (need |phi|<1, sigma_sq>0, |rho|<1): {theta[bad] if theta.ndim > 1 else theta}"
        )


def _theta_array(theta) -> np.ndarray:
    if isinstance(theta, ParameterVector):
        return theta.as_array()
    return np.asarray(theta, dtype=float)


def _checked_exp(v):
    v = np.asarray(v, dtype=float)
    if np.any(np.abs(v) > EXP_CLAMP):
        raise SaturationError(f"exp argument {v} outside [-{EXP_CLAMP}, {EXP_CLAMP}]")
    out = np.exp(v)
    return float(out) if out.ndim == 0 else out


# --- densities and moments -------------------------------------------------

def initial_state_moments(theta: ParameterVector) -> tuple[float, float]:
    return theta.mu, theta.sigma_sq / (1.0 - theta.phi**2)


def transition_moments(theta: ParameterVector, x_prev, y_prev):
    """Mean and variance of x_t given x_{t-1} and y_{t-1}.

    Raises SaturationError when ``exp(-x_prev / 2)`` would overflow.
    """
    lev = _checked_exp(-0.5 * np.asarray(x_prev, dtype=float))
    mean = theta.mu + theta.phi * (x_prev - theta.mu) + theta.rho * math.sqrt(theta.sigma_sq) * lev * y_prev
    return mean, theta.sigma_sq * (1.0 - theta.rho**2)


def _normal_logpdf(v, mean, var):
    return -0.5 * (LOG_2PI + np.log(var) + (v - mean) ** 2 / var)


def observation_log_density(y, x):
    """log N(y; 0, exp(x)); -inf when the density underflows."""
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        quad = np.where(y == 0.0, 0.0, y * y * np.exp(-x))
    out = -0.5 * (LOG_2PI + x + quad)
    return float(out) if out.ndim == 0 else out


def transition_log_density(x_new, x_prev, y_prev, theta: ParameterVector):
    mean, var = transition_moments(theta, x_prev, y_prev)
    out = _normal_logpdf(np.asarray(x_new, dtype=float), mean, var)
    return float(out) if np.ndim(out) == 0 else out


def prior_log_density(theta) -> float:
    """Independent priors: Beta(20, 1.5) on (phi+1)/2, N(0, 25) on mu,
    InvGamma(2.5, 0.025) on sigma_sq, U(-1, 1) on rho."""
    mu, phi, s2, rho = (float(v) for v in _theta_array(theta))
    if not (math.isfinite(mu) and abs(phi) < 1.0 and s2 > 0.0 and math.isfinite(s2) and abs(rho) < 1.0):
        return -math.inf
    a, b = PHI_BETA
    lp_phi = (
        (a - 1.0) * math.log((phi + 1.0) / 2.0)
        + (b - 1.0) * math.log((1.0 - phi) / 2.0)
        - (math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b))
        + math.log(0.5)
    )
    lp_mu = -0.5 * (LOG_2PI + math.log(MU_VAR) + (mu - MU_MEAN) ** 2 / MU_VAR)
    k, s = SIGMA_SQ_SHAPE, SIGMA_SQ_SCALE
    lp_s2 = k * math.log(s) - math.lgamma(k) - (k + 1.0) * math.log(s2) - s / s2
    lp_rho = math.log(0.5)
    return lp_phi + lp_mu + lp_s2 + lp_rho


def sample_prior(rng: np.random.Generator, size=None) -> np.ndarray:
    """Draw from the prior; returns shape (4,) or (size, 4)."""
    n = 1 if size is None else size
    a, b = PHI_BETA
    phi = 2.0 * rng.beta(a, b, n) - 1.0
    mu = rng.normal(MU_MEAN, math.sqrt(MU_VAR), n)
    s2 = SIGMA_SQ_SCALE / rng.gamma(SIGMA_SQ_SHAPE, 1.0, n)
    rho = rng.uniform(-1.0, 1.0, n)
    out = np.column_stack([mu, phi, s2, rho])
    # boundary draws from beta/uniform are possible in floating point
    out[:, 1] = np.clip(out[:, 1], -1.0 + 1e-12, 1.0 - 1e-12)
    out[:, 3] = np.clip(out[:, 3], -1.0 + 1e-12, 1.0 - 1e-12)
    return out[0] if size is None else out


# --- unconstrained coordinates ----------------------------------------------

def to_unconstrained(theta) -> np.ndarray:
    t = _theta_array(theta)
    z = np.empty_like(t)
    z[..., 0] = t[..., 0]
    z[..., 1] = 2.0 * np.arctanh(t[..., 1])
    z[..., 2] = np.log(t[..., 2])
    z[..., 3] = 2.0 * np.arctanh(t[..., 3])
    return z


def from_unconstrained_array(z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    t = np.empty_like(z)
    t[..., 0] = z[..., 0]
    t[..., 1] = np.tanh(0.5 * z[..., 1])
    t[..., 2] = np.exp(z[..., 2])
    t[..., 3] = np.tanh(0.5 * z[..., 3])
    return t


def from_unconstrained(z) -> ParameterVector:
    return ParameterVector.from_array(from_unconstrained_array(z))


def _log_half_sech2(u):
    # log((1 - tanh(u)^2) / 2), stable for large |u|
    au = np.abs(u)
    return 2.0 * (math.log(2.0) - au - np.log1p(np.exp(-2.0 * au))) - math.log(2.0)


def log_jacobian(z):
    """log |d theta / d z| of :func:`from_unconstrained_array`."""
    z = np.asarray(z, dtype=float)
    out = _log_half_sech2(0.5 * z[..., 1]) + z[..., 2] + _log_half_sech2(0.5 * z[..., 3])
    return float(out) if np.ndim(out) == 0 else out


def log_prior_unconstrained(z) -> float:
    """Prior density pushed forward to unconstrained coordinates."""
    theta = from_unconstrained_array(z)
    # tanh saturates to +-1 for |z| > ~38; that is outside the support numerically
    lp = prior_log_density(theta)
    if not math.isfinite(lp):
        return -math.inf
    return lp + log_jacobian(z)


# --- forecasting -------------------------------------------------------------

def forecast_second_moment(particles, log_weights, y_t, theta: ParameterVector) -> float:
    """E[y_{t+1}^2 | y_{1:t}, theta] from a weighted filtering cloud.

    Each particle contributes the lognormal mean exp(m_i + v/2) of
    exp(x_{t+1}), with (m_i, v) its transition moments.
    """
    x = np.asarray(particles, dtype=float)
    lw = np.asarray(log_weights, dtype=float)
    if x.size == 0:
        raise ValueError("empty particle cloud")
    if x.shape != lw.shape:
        raise ValueError("particles and log_weights differ in length")
    m, v = transition_moments(theta, x, y_t)
    lw = lw - kernels.logsumexp(lw)
    return float(np.sum(np.exp(lw) * np.exp(np.asarray(m) + 0.5 * v)))


# --- vectorised model object ---------------------------------------------------

class SVModel:
    """Batched interface used by the filters and PMMH.

    ``params`` arguments are arrays of shape ``(4, B, N)``, one parameter
    value per particle; state arrays are ``(B, N)``.
    """

    name = "sv"
    n_params = 4
    param_names = PARAM_NAMES

    check = staticmethod(check_constraints)
    to_unconstrained = staticmethod(to_unconstrained)
    from_unconstrained = staticmethod(from_unconstrained_array)
    log_jacobian = staticmethod(log_jacobian)
    log_prior = staticmethod(prior_log_density)
    log_prior_unconstrained = staticmethod(log_prior_unconstrained)
    sample_prior = staticmethod(sample_prior)

    def simulate(self, theta, T, rng: np.random.Generator):
        """Draw (x_{1:T}, y_{1:T}) from the model at one parameter vector."""
        mu, phi, s2, rho = _theta_array(theta)
        check_constraints(np.array([mu, phi, s2, rho]))
        sd = math.sqrt(s2)
        x = np.empty(T)
        y = np.empty(T)
        x[0] = mu + math.sqrt(s2 / (1.0 - phi * phi)) * rng.standard_normal()
        for t in range(T):
            if t:
                mean = mu + phi * (x[t - 1] - mu) + rho * sd * math.exp(-x[t - 1] / 2.0) * y[t - 1]
                x[t] = mean + sd * math.sqrt(1.0 - rho * rho) * rng.standard_normal()
            y[t] = math.exp(x[t] / 2.0) * rng.standard_normal()
        return x, y

    def initial_sample(self, params, eps):
        mu, phi, s2, _ = params
        return kernels.sv_initial(mu, phi, s2, eps)

    def initial_moments(self, params):
        mu, phi, s2, _ = params
        return mu, s2 / (1.0 - phi * phi)

    def initial_logpdf(self, params, x):
        return _normal_logpdf(x, *self.initial_moments(params))

    def transition_mean(self, params, x_prev, y_prev):
        mu, phi, s2, rho = params
        return kernels.sv_transition_mean(mu, phi, s2, rho, x_prev, float(y_prev))

    def transition_var(self, params):
        _, _, s2, rho = params
        return s2 * (1.0 - rho * rho)

    def transition_sample(self, params, x_prev, y_prev, eps):
        mu, phi, s2, rho = params
        return kernels.sv_propagate(mu, phi, s2, rho, x_prev, float(y_prev), eps)

    def transition_logpdf(self, params, x_new, x_prev, y_prev):
        return _normal_logpdf(x_new, self.transition_mean(params, x_prev, y_prev), self.transition_var(params))

    def obs_logpdf(self, params, y, x):
        return kernels.sv_obs_logpdf(float(y), x)

    def bootstrap_loglik(self, theta, y, normals, uniforms, threshold):
        """Fused full-run bootstrap filter; ``normals``/``uniforms`` are (T, B, N)."""
        _, B, N = normals.shape
        mu, phi, s2, rho = (np.full((B, N), v) for v in _theta_array(theta))
        return kernels.sv_bootstrap_loglik(
            np.ascontiguousarray(y, dtype=float), mu, phi, s2, rho,
            np.ascontiguousarray(normals), np.ascontiguousarray(uniforms), float(threshold),
        )


SV = SVModel()
