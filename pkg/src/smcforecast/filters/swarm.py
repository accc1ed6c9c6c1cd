"""Particle swarm filter: one non-interacting SISR filter per parameter draw.

Bundles never exchange particles and their parameters are never
refreshed.  Internally all bundles advance together as one ``(N_theta,
N)`` batch; bundle ``i`` draws its noise from ``NoiseSource(seed, i)``,
so a one-bundle swarm reproduces :class:`SISRFilter` run on
``NoiseSource(seed, 0)`` bit for bit.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .. import kernels
from ..model import SV
from ..rng import NoiseSource
from .core import FilterRecord, ParticleCloud, broadcast_params, finish_step
from .sisr import SequentialFilter

WEIGHTINGS = ("uniform", "history")


@dataclass
class SwarmBundle:
    theta: np.ndarray
    cloud: ParticleCloud
    per_theta_log_evidence: np.ndarray
    noise: NoiseSource = field(repr=False, default=None)


def aggregate(log_ev, means, ess, log_prior_weights=None):
    """Combine per-bundle summaries into one record's values.

    With ``log_prior_weights=None`` the evidence is the plain average of
    per-bundle conditional evidences.  The filter mean and ESS treat the
    swarm as a mixture whose component weights are proportional to the
    per-bundle evidences (times the prior weights, when given).
    """
    log_ev = np.asarray(log_ev, dtype=float)
    B = log_ev.shape[0]
    if B == 1 and log_prior_weights is None:
        return float(log_ev[0]), float(means[0]), float(ess[0])
    lpw = np.full(B, -math.log(B)) if log_prior_weights is None else log_prior_weights - kernels.logsumexp(log_prior_weights)
    joint = lpw + log_ev
    agg_ev = kernels.logsumexp(joint)
    omega = np.exp(joint - agg_ev)
    mean = float(np.sum(omega * means))
    agg_ess = float(1.0 / np.sum(omega**2 / np.asarray(ess)))
    return float(agg_ev), mean, agg_ess


class ParticleSwarmFilter(SequentialFilter):
    algorithm_id = "swarm"

    def __init__(self, theta_samples, n_particles=100, seed=0, *, model=SV, threshold=1.0,
                 weighting="uniform", workers=1):
        theta = np.asarray(theta_samples, dtype=float)
        if theta.ndim == 1:
            theta = theta[None, :]
        if theta.shape[0] == 0:
            raise ValueError("theta_samples is empty")
        if theta.shape[1] != model.n_params:
            raise ValueError(f"theta_samples must be (N_theta, {model.n_params})")
        if weighting not in WEIGHTINGS:
            raise ValueError(f"weighting must be one of {WEIGHTINGS}")
        model.check(theta)
        self.model = model
        self.theta = theta
        self.n_particles = int(n_particles)
        self.threshold = float(threshold)
        self.weighting = weighting
        self.workers = max(1, int(workers))
        B = theta.shape[0]
        self.noises = [NoiseSource(seed, b) for b in range(B)]
        self._params = np.ascontiguousarray(
            np.stack([broadcast_params(th, 1, self.n_particles)[:, 0] for th in theta], axis=1)
        )
        self.x = None
        self.logw = None
        self.time_index = 0
        self._evidence: list[np.ndarray] = []
        self._cum = np.zeros(B)

    @property
    def n_theta(self) -> int:
        return self.theta.shape[0]

    def _chunks(self):
        B = self.n_theta
        k = min(self.workers, B)
        bounds = np.linspace(0, B, k + 1).astype(int)
        return [slice(lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]

    def _advance(self, sl, y_t, y_prev, t):
        N = self.n_particles
        rows = range(sl.start, sl.stop)
        eps = np.stack([self.noises[b].normal(N) for b in rows])
        u = np.stack([self.noises[b].uniform(N) for b in rows])
        params = self._params[:, sl]
        if t == 1:
            x = self.model.initial_sample(params, eps)
            logw_prev = np.zeros((len(rows), N))
        else:
            x = self.model.transition_sample(params, self.x[sl], y_prev, eps)
            logw_prev = self.logw[sl]
        loginc = self.model.obs_logpdf(params, y_t, x)
        x, logw, _, log_ev, mean, ess = finish_step(x, logw_prev, loginc, u, self.threshold, t,
                                                    bundle_offset=sl.start)
        return x, logw, log_ev, mean, ess

    def _step(self, y_t, y_prev, t) -> FilterRecord:
        chunks = self._chunks()
        if len(chunks) == 1:
            results = [self._advance(chunks[0], y_t, y_prev, t)]
        else:
            with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
                results = list(pool.map(lambda sl: self._advance(sl, y_t, y_prev, t), chunks))
        # reduction in bundle-index order
        x, logw, log_ev, mean, ess = (np.concatenate(parts) for parts in zip(*results))
        self.x, self.logw, self.time_index = x, logw, t
        prior = self._cum.copy() if self.weighting == "history" else None
        self._evidence.append(log_ev)
        self._cum += log_ev
        agg_ev, agg_mean, agg_ess = aggregate(log_ev, mean, ess, prior)
        return FilterRecord(t, agg_ev, agg_mean, agg_ess)

    def init(self, y1) -> FilterRecord:
        return self._step(y1, None, 1)

    def step(self, y_t, y_prev) -> FilterRecord:
        if self.x is None:
            raise RuntimeError("call init() before step()")
        return self._step(y_t, y_prev, self.time_index + 1)

    @property
    def per_theta_log_evidence(self) -> np.ndarray:
        """(t, N_theta) per-bundle log conditional evidences so far."""
        return np.array(self._evidence).reshape(len(self._evidence), self.n_theta)

    @property
    def bundles(self) -> list[SwarmBundle]:
        ev = self.per_theta_log_evidence
        return [
            SwarmBundle(self.theta[b], ParticleCloud(self.x[b].copy(), self.logw[b].copy(), self.time_index),
                        ev[:, b].copy(), self.noises[b])
            for b in range(self.n_theta)
        ]


def swarm_init(theta_samples, y1, n_particles_per_theta, seed, **kwargs):
    """Start a swarm on y_1; returns ``(swarm, record)``.

    ``swarm.bundles`` exposes the per-parameter clouds and evidences.
    """
    swarm = ParticleSwarmFilter(theta_samples, n_particles_per_theta, seed, **kwargs)
    return swarm, swarm.init(y1)


def swarm_step(swarm: ParticleSwarmFilter, y_t, y_prev):
    return swarm, swarm.step(y_t, y_prev)
