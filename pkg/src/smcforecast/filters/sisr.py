"""Sequential importance sampling with resampling at a fixed parameter."""
from __future__ import annotations

import numpy as np

from .. import kernels
from ..model import SV, ParameterVector
from ..rng import NoiseSource, as_noise
from .core import (
    FilterRecord,
    ParticleCloud,
    broadcast_params,
    finish_step,
)

DEFAULT_THRESHOLD = 0.5


def _normal_logpdf(v, mean, var):
    return -0.5 * (np.log(2.0 * np.pi * var) + (v - mean) ** 2 / var)


class BootstrapProposal:
    """Propose from the model's own initial law and transition.

    The f/q ratio cancels, so the incremental weight is just g(y_t | x_t).
    """

    is_bootstrap = True


class InflatedTransitionProposal:
    """Model initial law / transition with the standard deviation scaled.

    A heavier-tailed importance density than the bootstrap proposal; the
    incremental weight carries the full g f / q ratio.
    """

    is_bootstrap = False

    def __init__(self, scale=1.5):
        if scale <= 0:
            raise ValueError("scale must be positive")
        self.scale = float(scale)

    def sample_initial(self, model, params, y1, eps):
        mean, var = model.initial_moments(params)
        return mean + self.scale * np.sqrt(var) * eps

    def initial_logpdf(self, model, params, y1, x):
        mean, var = model.initial_moments(params)
        return _normal_logpdf(x, mean, self.scale**2 * var)

    def sample(self, model, params, x_prev, y_prev, y_t, eps):
        mean = model.transition_mean(params, x_prev, y_prev)
        return mean + self.scale * np.sqrt(model.transition_var(params)) * eps

    def logpdf(self, model, params, x_new, x_prev, y_prev, y_t):
        mean = model.transition_mean(params, x_prev, y_prev)
        return _normal_logpdf(x_new, mean, self.scale**2 * model.transition_var(params))


def _theta_vec(theta, model) -> np.ndarray:
    if isinstance(theta, ParameterVector):
        theta = theta.as_array()
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.shape[0] != model.n_params:
        raise ValueError(f"{model.name} expects {model.n_params} parameters, got {theta.shape[0]}")
    model.check(theta)
    return theta


def _record(t, log_ev, mean, ess_) -> FilterRecord:
    return FilterRecord(t, float(log_ev[0]), float(mean[0]), float(ess_[0]))


def sisr_init(theta, y1, n_particles, rng, *, model=SV, proposal=None,
              threshold=DEFAULT_THRESHOLD) -> tuple[ParticleCloud, FilterRecord]:
    """First SISR step: sample x_1, weight by g mu / q, summarise, resample."""
    if n_particles < 1:
        raise ValueError("n_particles must be >= 1")
    noise = as_noise(rng)
    theta = _theta_vec(theta, model)
    params = broadcast_params(theta, 1, n_particles)
    eps = noise.normal((1, n_particles))
    u = noise.uniform((1, n_particles))
    if proposal is None or proposal.is_bootstrap:
        x = model.initial_sample(params, eps)
        loginc = model.obs_logpdf(params, y1, x)
    else:
        x = proposal.sample_initial(model, params, y1, eps)
        loginc = (model.obs_logpdf(params, y1, x) + model.initial_logpdf(params, x)
                  - proposal.initial_logpdf(model, params, y1, x))
    x, logw, _, log_ev, mean, ess_ = finish_step(x, np.zeros((1, n_particles)), loginc, u, threshold, 1)
    return ParticleCloud(x[0], logw[0], 1), _record(1, log_ev, mean, ess_)


def sisr_step(cloud: ParticleCloud, theta, y_t, y_prev, rng, *, model=SV, proposal=None,
              threshold=DEFAULT_THRESHOLD) -> tuple[ParticleCloud, FilterRecord]:
    """Advance a cloud from t-1 to t, carrying the previous weights."""
    noise = as_noise(rng)
    theta = _theta_vec(theta, model)
    n = cloud.n
    t = cloud.time_index + 1
    params = broadcast_params(theta, 1, n)
    x_prev = cloud.particles[None, :]
    eps = noise.normal((1, n))
    u = noise.uniform((1, n))
    if proposal is None or proposal.is_bootstrap:
        x = model.transition_sample(params, x_prev, y_prev, eps)
        loginc = model.obs_logpdf(params, y_t, x)
    else:
        x = proposal.sample(model, params, x_prev, y_prev, y_t, eps)
        loginc = (model.obs_logpdf(params, y_t, x) + model.transition_logpdf(params, x, x_prev, y_prev)
                  - proposal.logpdf(model, params, x, x_prev, y_prev, y_t))
    x, logw, _, log_ev, mean, ess_ = finish_step(
        x, np.ascontiguousarray(cloud.log_weights[None, :]), loginc, u, threshold, t
    )
    return ParticleCloud(x[0], logw[0], t), _record(t, log_ev, mean, ess_)


class SequentialFilter:
    """Common driver: ``init`` on y_1, ``step`` for each later observation."""

    algorithm_id = "filter"

    def run(self, y) -> list[FilterRecord]:
        y = np.asarray(y, dtype=float)
        if y.size == 0:
            return []
        records = [self.init(y[0])]
        for t in range(1, y.shape[0]):
            records.append(self.step(y[t], y[t - 1]))
        return records


class SISRFilter(SequentialFilter):
    algorithm_id = "sisr"

    def __init__(self, theta, n_particles=100, rng=0, *, model=SV, proposal=None,
                 threshold=DEFAULT_THRESHOLD):
        self.model = model
        self.theta = _theta_vec(theta, model)
        self.n_particles = int(n_particles)
        self.noise = as_noise(rng)
        self.proposal = proposal
        self.threshold = float(threshold)
        self.cloud: ParticleCloud | None = None

    def init(self, y1) -> FilterRecord:
        self.cloud, rec = sisr_init(self.theta, y1, self.n_particles, self.noise, model=self.model,
                                    proposal=self.proposal, threshold=self.threshold)
        return rec

    def step(self, y_t, y_prev) -> FilterRecord:
        if self.cloud is None:
            raise RuntimeError("call init() before step()")
        self.cloud, rec = sisr_step(self.cloud, self.theta, y_t, y_prev, self.noise, model=self.model,
                                    proposal=self.proposal, threshold=self.threshold)
        return rec


def bootstrap_loglik(theta, y, n_particles, noises: list[NoiseSource], *, model=SV,
                     threshold=DEFAULT_THRESHOLD) -> np.ndarray:
    """Total log-likelihood of ``len(noises)`` independent bootstrap filters.

    Draws the whole run's noise up front, so the result equals summing the
    records of :class:`SISRFilter` driven by the same noise sources.
    Degenerate replicates give ``-inf``.
    """
    y = np.ascontiguousarray(y, dtype=float)
    theta = _theta_vec(theta, model)
    T, N = y.shape[0], int(n_particles)
    normals = np.ascontiguousarray(np.stack([ns.normal((T, N)) for ns in noises], axis=1))
    uniforms = np.ascontiguousarray(np.stack([ns.uniform((T, N)) for ns in noises], axis=1))
    fused = getattr(model, "bootstrap_loglik", None)
    if fused is not None:
        return fused(theta, y, normals, uniforms, threshold)
    return _generic_bootstrap_loglik(model, theta, y, normals, uniforms, threshold)


def _generic_bootstrap_loglik(model, theta, y, normals, uniforms, threshold):
    T, B, N = normals.shape
    params = broadcast_params(theta, B, N)
    total = np.zeros(B)
    logw = np.zeros((B, N))
    x = model.initial_sample(params, normals[0])
    for t in range(T):
        if t > 0:
            x = model.transition_sample(params, x, y[t - 1], normals[t])
        loginc = np.ascontiguousarray(model.obs_logpdf(params, y[t], x))
        logw, idx, log_ev, _, _, _ = kernels.reweight_resample(logw, loginc, np.ascontiguousarray(x),
                                                               uniforms[t], float(threshold))
        total += log_ev
        x = np.take_along_axis(x, idx, axis=1)
        dead = ~np.isfinite(log_ev)
        if dead.any():
            logw[dead] = 0.0
            x[dead] = 0.0
    return total
