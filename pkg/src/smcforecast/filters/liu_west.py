"""Liu-West filters: joint (x_t, theta) particles with kernel shrinkage.

Both variants move parameters by the artificial evolution

    m_i = a z_i + (1 - a) zbar,      z~_i ~ N(m_i, h^2 V)

with ``a = (3 delta - 1) / (2 delta)`` and ``h^2 = 1 - a^2``, where ``z``
are the parameter particles in unconstrained coordinates and ``zbar``/``V``
their weighted mean and covariance.  Working in unconstrained coordinates
keeps every proposed parameter inside the model's support.

``AuxiliaryLiuWestFilter`` adds the lookahead first-stage resampling of
the original algorithm; ``LiuWestFilter`` propagates each particle with
its own shrunk parameter and carries SISR weights.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..model import SV
from ..rng import as_noise
from .core import (
    AugmentedCloud,
    DegenerateCloudError,
    FilterRecord,
    finish_step,
    per_particle_params,
)
from .sisr import SequentialFilter


@dataclass(frozen=True)
class LiuWestConfig:
    delta: float = 0.99
    n_particles: int = 500
    resample_threshold: float = 0.5
    ridge: float = 1e-10

    def __post_init__(self):
        # delta = 1 is the frozen-parameter limit (a = 1, h^2 = 0)
        if not (1.0 / 3.0 < self.delta <= 1.0):
            raise ValueError(f"delta must lie in (1/3, 1], got {self.delta}")
        if self.n_particles < 1:
            raise ValueError("n_particles must be >= 1")
        if not (0.0 < self.resample_threshold <= 1.0):
            raise ValueError("resample_threshold must lie in (0, 1]")

    @property
    def a(self) -> float:
        return (3.0 * self.delta - 1.0) / (2.0 * self.delta)

    @property
    def h2(self) -> float:
        return 1.0 - self.a**2


def kernel_shrinkage(z, weights, a, ridge=1e-10):
    """Shrinkage locations and ridged weighted covariance of ``z`` (N, d).

    ``weights`` must be normalised.  The weighted mean of the returned
    locations equals the weighted mean of ``z``.
    """
    z = np.asarray(z, dtype=float)
    w = np.asarray(weights, dtype=float)
    zbar = w @ z
    dev = z - zbar
    V = (dev * w[:, None]).T @ dev
    V = 0.5 * (V + V.T) + ridge * np.eye(z.shape[1])
    return a * z + (1.0 - a) * zbar, V


def _scaled_cholesky(V, h2):
    if h2 <= 0.0:
        return np.zeros_like(V)
    cov = h2 * V
    jitter = 0.0
    for _ in range(8):
        try:
            return np.linalg.cholesky(cov + jitter * np.eye(cov.shape[0]))
        except np.linalg.LinAlgError:
            jitter = max(jitter * 100.0, 1e-10 * max(np.trace(cov), 1e-300))
    raise np.linalg.LinAlgError("parameter covariance is not positive definite")


class _LiuWestBase(SequentialFilter):
    def __init__(self, theta_samples, config: LiuWestConfig | None = None, rng=0, *, model=SV):
        self.config = config or LiuWestConfig()
        self.model = model
        theta = np.asarray(theta_samples, dtype=float)
        if theta.ndim != 2 or theta.shape[1] != model.n_params:
            raise ValueError(f"theta_samples must be (N, {model.n_params})")
        if theta.shape[0] != self.config.n_particles:
            raise ValueError(
                f"need one parameter draw per particle: got {theta.shape[0]}, n_particles={self.config.n_particles}"
            )
        model.check(theta)
        self._theta0 = theta
        self.noise = as_noise(rng)
        self.cloud: AugmentedCloud | None = None

    @property
    def n(self) -> int:
        return self.config.n_particles

    def init(self, y1) -> FilterRecord:
        N = self.n
        theta = self._theta0
        params = per_particle_params(theta)
        eps = self.noise.normal((1, N))
        u = self.noise.uniform((1, N))
        x = self.model.initial_sample(params, eps)
        loginc = self.model.obs_logpdf(params, y1, x)
        x, logw, idx, log_ev, mean, ess = finish_step(x, np.zeros((1, N)), loginc, u,
                                                      self.config.resample_threshold, 1)
        theta = theta[idx[0]]
        self.cloud = AugmentedCloud(x[0], logw[0], 1, params=theta,
                                    unconstrained=self.model.to_unconstrained(theta))
        return FilterRecord(1, float(log_ev[0]), float(mean[0]), float(ess[0]))

    def _shrink(self):
        c = self.cloud
        return kernel_shrinkage(c.unconstrained, c.normalized_weights(), self.config.a, self.config.ridge)

    def _perturb(self, centres, V):
        L = _scaled_cholesky(V, self.config.h2)
        eps = self.noise.param_normal(centres.shape)
        z = centres + eps @ L.T
        return z, self.model.from_unconstrained(z)

    def parameter_samples(self):
        """Current marginal parameter particles (N, d) and their normalised weights."""
        if self.cloud is None:
            raise RuntimeError("filter not initialised")
        return self.cloud.params, self.cloud.normalized_weights()


class LiuWestFilter(_LiuWestBase):
    """SISR-style Liu-West filter: no auxiliary stage, carried weights."""

    algorithm_id = "lw2"

    def step(self, y_t, y_prev) -> FilterRecord:
        if self.cloud is None:
            raise RuntimeError("call init() before step()")
        c = self.cloud
        N, t = self.n, c.time_index + 1
        centres, V = self._shrink()
        eps = self.noise.normal((1, N))
        u = self.noise.uniform((1, N))
        z_new, theta_new = self._perturb(centres, V)
        params = per_particle_params(theta_new)
        x = self.model.transition_sample(params, c.particles[None, :], y_prev, eps)
        loginc = self.model.obs_logpdf(params, y_t, x)
        x, logw, idx, log_ev, mean, ess = finish_step(
            x, np.ascontiguousarray(c.log_weights[None, :]), loginc, u, self.config.resample_threshold, t
        )
        self.cloud = AugmentedCloud(x[0], logw[0], t, params=theta_new[idx[0]], unconstrained=z_new[idx[0]])
        return FilterRecord(t, float(log_ev[0]), float(mean[0]), float(ess[0]))


class AuxiliaryLiuWestFilter(_LiuWestBase):
    """Auxiliary-style Liu-West filter with predictive-likelihood lookahead.

    The first stage resamples ancestors with probability proportional to
    w_k g(y_t | mu_k), where mu_k is the transition mean under the
    particle's current parameter.  The conditional evidence is
    sum_k W_k g(y_t | mu_k) times the mean second-stage weight.
    """

    algorithm_id = "lw1"

    def step(self, y_t, y_prev) -> FilterRecord:
        if self.cloud is None:
            raise RuntimeError("call init() before step()")
        c = self.cloud
        N, t = self.n, c.time_index + 1
        centres, V = self._shrink()
        x_prev = c.particles[None, :]
        mu_pred = self.model.transition_mean(per_particle_params(c.params), x_prev, y_prev)
        look = self.model.obs_logpdf(per_particle_params(self.model.from_unconstrained(centres)), y_t, mu_pred)
        lw_norm = c.log_weights - kernels.logsumexp(c.log_weights)
        first = np.ascontiguousarray(lw_norm[None, :] + look)
        first[np.isnan(first)] = -np.inf
        log_first = kernels.logsumexp(first)
        if not np.isfinite(log_first):
            raise DegenerateCloudError(t)
        u1 = self.noise.uniform((1, N))
        eps = self.noise.normal((1, N))
        u2 = self.noise.uniform((1, N))
        anc = kernels.multinomial_indices(first, u1)[0]
        z_new, theta_new = self._perturb(centres[anc], V)
        params = per_particle_params(theta_new)
        x = self.model.transition_sample(params, np.ascontiguousarray(x_prev[:, anc]), y_prev, eps)
        loginc = self.model.obs_logpdf(params, y_t, x) - look[:, anc]
        x, logw, idx, log_ev, mean, ess = finish_step(x, np.zeros((1, N)), loginc, u2,
                                                      self.config.resample_threshold, t)
        self.cloud = AugmentedCloud(x[0], logw[0], t, params=theta_new[idx[0]], unconstrained=z_new[idx[0]])
        return FilterRecord(t, float(log_first + log_ev[0]), float(mean[0]), float(ess[0]))
