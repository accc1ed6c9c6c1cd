"""Types and weight arithmetic shared by every filter."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import kernels


class DegenerateCloudError(RuntimeError):
    """Every particle weight underflowed to zero."""

    def __init__(self, time_index, bundle=None):
        self.time_index = time_index
        self.bundle = bundle
        where = f"time {time_index}" if bundle is None else f"bundle {bundle} (theta index) at time {time_index}"
        super().__init__(f"degenerate particle cloud: all weights are zero at {where}")


@dataclass(frozen=True)
class FilterRecord:
    time_index: int
    log_cond_evidence: float
    filter_mean: float
    ess: float


@dataclass
class ParticleCloud:
    """Weighted latent-state sample after step ``time_index``.

    ``log_weights`` are kept on the mean-one scale: they are exactly zero
    right after resampling and otherwise satisfy ``mean(exp(lw)) == 1``.
    """

    particles: np.ndarray
    log_weights: np.ndarray
    time_index: int

    def __post_init__(self):
        if self.particles.shape != self.log_weights.shape:
            raise ValueError("particles and log_weights must have equal length")

    @property
    def n(self) -> int:
        return self.particles.shape[0]

    def normalized_weights(self) -> np.ndarray:
        return normalize(self.log_weights)

    def ess(self) -> float:
        return ess(self.log_weights)


@dataclass
class AugmentedCloud(ParticleCloud):
    """Particle cloud over (x_t, theta); ``params`` is (N, d) constrained."""

    params: np.ndarray = field(default=None)
    unconstrained: np.ndarray = field(default=None, repr=False)


def _as_log_weights(log_weights) -> np.ndarray:
    lw = np.asarray(log_weights, dtype=float)
    if lw.ndim != 1 or lw.size == 0:
        raise ValueError("log_weights must be a non-empty 1-d sequence")
    if not np.any(np.isfinite(lw)) or np.any(np.isnan(lw)) or np.any(lw == np.inf):
        raise ValueError("log_weights need at least one finite entry and no nan/+inf")
    return lw


def normalize(log_weights) -> np.ndarray:
    lw = _as_log_weights(log_weights)
    w = np.exp(lw - lw.max())
    return w / w.sum()


def ess(log_weights) -> float:
    """Effective sample size (sum w)^2 / sum w^2 from log weights."""
    lw = _as_log_weights(log_weights)
    w = np.exp(lw - lw.max())
    return float(w.sum() ** 2 / np.sum(w * w))


def multinomial_resample(log_weights, rng: np.random.Generator) -> np.ndarray:
    """N independent categorical draws; returns 0-based indices."""
    lw = _as_log_weights(log_weights)
    u = rng.random(lw.shape[0])
    return kernels.multinomial_indices(lw[None, :], u[None, :])[0]


def broadcast_params(theta, B: int, N: int) -> np.ndarray:
    """Materialise a (d,) parameter vector as a contiguous (d, B, N) array."""
    theta = np.asarray(theta, dtype=float)
    return np.ascontiguousarray(np.broadcast_to(theta[:, None, None], (theta.shape[0], B, N)))


def per_particle_params(theta_rows) -> np.ndarray:
    """(N, d) parameter rows -> contiguous (d, 1, N)."""
    return np.ascontiguousarray(np.asarray(theta_rows, dtype=float).T[:, None, :])


def finish_step(x, logw_prev, loginc, u, threshold, time_index, bundle_offset=None):
    """Reweight, summarise and (maybe) resample a batch of clouds.

    Returns ``(x_new, logw_new, idx, log_ev, mean, ess)`` with ``x_new``
    already gathered.  Raises DegenerateCloudError on a dead row.
    """
    logw_new, idx, log_ev, mean, ess_, _ = kernels.reweight_resample(
        logw_prev, np.ascontiguousarray(loginc), x, u, float(threshold)
    )
    dead = np.flatnonzero(~np.isfinite(log_ev))
    if dead.size:
        bundle = None if bundle_offset is None else int(bundle_offset + dead[0])
        raise DegenerateCloudError(time_index, bundle)
    return np.take_along_axis(x, idx, axis=1), logw_new, idx, log_ev, mean, ess_
