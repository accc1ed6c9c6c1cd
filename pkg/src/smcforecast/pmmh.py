"""Particle-marginal Metropolis-Hastings with averaged likelihood replicates.

The chain moves by a Gaussian random walk in unconstrained coordinates
and targets the prior pushed forward to those coordinates (prior density
plus log-Jacobian) times the estimated likelihood.  The estimate is the
arithmetic mean of ``K`` independent bootstrap-filter likelihoods, which
keeps it unbiased.

Randomness: the chain's own draws (proposal normals, then the accept
uniform, once per iteration) come from ``derive(seed, 0)``; likelihood
replicate ``k`` at iteration ``i`` uses ``NoiseSource(derive(seed, 1, i), k)``;
prior draws for initialisation attempt ``r`` come from ``derive(seed, 2, r)``.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kernels
from .filters.sisr import DEFAULT_THRESHOLD, bootstrap_loglik
from .model import SV
from .rng import NoiseSource, derive, generator

log = logging.getLogger(__name__)

DEFAULT_PROPOSAL_SCALE = 2.38**2 / 4.0


class InitializationError(RuntimeError):
    pass


@dataclass(frozen=True)
class ProposalConfig:
    n_iterations: int = 1000
    n_filter_replicates: int = 7
    n_state_particles: int = 100
    proposal_scale: float = DEFAULT_PROPOSAL_SCALE
    covariance: np.ndarray | None = field(default=None, compare=False)
    resample_threshold: float = DEFAULT_THRESHOLD
    max_init_tries: int = 100
    workers: int = 1

    def __post_init__(self):
        if self.n_iterations < 0:
            raise ValueError("n_iterations must be >= 0")
        if self.n_filter_replicates < 1 or self.n_state_particles < 1:
            raise ValueError("need at least one replicate and one particle")
        if self.covariance is not None:
            c = np.asarray(self.covariance, dtype=float)
            if c.ndim != 2 or c.shape[0] != c.shape[1] or not np.allclose(c, c.T):
                raise ValueError("covariance must be a symmetric square matrix")
            np.linalg.cholesky(c)  # raises unless positive definite

    def proposal_covariance(self, dim: int) -> np.ndarray:
        if self.covariance is not None:
            c = np.asarray(self.covariance, dtype=float)
            if c.shape != (dim, dim):
                raise ValueError(f"covariance must be {dim}x{dim}")
            return c
        return np.eye(dim) * self.proposal_scale


@dataclass
class ChainState:
    z: np.ndarray
    cached_avg_loglike: float
    iteration: int = 1
    accepted_count: int = 0


@dataclass
class MCMCOutput:
    samples: np.ndarray          # (n, d) constrained
    unconstrained: np.ndarray    # (n, d)
    avg_loglike: np.ndarray      # (n,)
    accepted: np.ndarray         # (n,) bool; first entry is the initial state
    acceptance_rate: float
    param_names: tuple = ()

    def __len__(self):
        return self.samples.shape[0]

    def discard(self, burn_in=0.1, thin=1) -> "MCMCOutput":
        """Drop a leading fraction (or count) of iterations and thin."""
        n = len(self)
        start = int(math.floor(burn_in * n)) if burn_in < 1 else int(burn_in)
        sl = slice(min(start, n), None, max(1, int(thin)))
        return MCMCOutput(self.samples[sl], self.unconstrained[sl], self.avg_loglike[sl],
                          self.accepted[sl], self.acceptance_rate, self.param_names)


def log_mean_exp(values) -> float:
    v = np.asarray(values, dtype=float)
    return float(kernels.logsumexp(v) - math.log(v.shape[0]))


def averaged_log_likelihood(theta, y, n_replicates, n_particles, seed, *, model=SV,
                            threshold=DEFAULT_THRESHOLD, workers=1) -> float:
    """log of the mean of ``n_replicates`` independent SISR likelihoods.

    Replicate ``k`` runs on ``NoiseSource(seed, k)``.  All replicates
    degenerate -> ``-inf``.
    """
    if n_replicates < 1 or n_particles < 1:
        raise ValueError("n_replicates and n_particles must be >= 1")
    noises = [NoiseSource(seed, k) for k in range(n_replicates)]
    workers = max(1, min(int(workers), n_replicates))
    if workers == 1:
        totals = bootstrap_loglik(theta, y, n_particles, noises, model=model, threshold=threshold)
    else:
        bounds = np.linspace(0, n_replicates, workers + 1).astype(int)
        groups = [noises[lo:hi] for lo, hi in zip(bounds[:-1], bounds[1:])]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(
                lambda g: bootstrap_loglik(theta, y, n_particles, g, model=model, threshold=threshold), groups
            ))
        totals = np.concatenate(parts)
    return log_mean_exp(totals)


def acceptance_log_ratio(current: ChainState, proposed_z, proposed_avg_loglike, *, model=SV) -> float:
    """log Hastings ratio for a symmetric random walk in unconstrained space.

    Uses the cached likelihood of the current state; never re-estimates it.
    """
    lp_new = model.log_prior_unconstrained(np.asarray(proposed_z, dtype=float))
    if not math.isfinite(lp_new) or not (proposed_avg_loglike > -math.inf):
        return -math.inf
    lp_cur = model.log_prior_unconstrained(current.z)
    return (lp_new + proposed_avg_loglike) - (lp_cur + current.cached_avg_loglike)


Estimator = Callable[[np.ndarray, np.random.SeedSequence], float]


def make_estimator(y, config: ProposalConfig, *, model=SV) -> Estimator:
    y = np.ascontiguousarray(y, dtype=float)

    def estimate(theta, seed):
        return averaged_log_likelihood(theta, y, config.n_filter_replicates, config.n_state_particles, seed,
                                       model=model, threshold=config.resample_threshold, workers=config.workers)

    return estimate


def _initialise(config, init_theta, seed, model, estimator):
    for attempt in range(config.max_init_tries):
        if init_theta is not None:
            theta = np.asarray(init_theta, dtype=float).reshape(-1)
            try:
                model.check(theta)
            except ValueError as exc:
                raise InitializationError(f"initial parameter {theta} is outside the support") from exc
        else:
            theta = np.asarray(model.sample_prior(generator(seed, 2, attempt)), dtype=float)
        z = model.to_unconstrained(theta)
        if not math.isfinite(model.log_prior_unconstrained(z)):
            if init_theta is not None:
                raise InitializationError(f"initial parameter {theta} has zero prior density")
            continue
        ll = float(estimator(theta, derive(seed, 1, 0, attempt)))
        if math.isfinite(ll):
            return z, ll
        log.info("initialisation attempt %d: likelihood estimate is zero", attempt)
    raise InitializationError(f"no initial state with finite likelihood after {config.max_init_tries} attempts")


def pmmh_run(y, config: ProposalConfig, init_theta=None, seed=0, *, model=SV,
             estimator: Estimator | None = None) -> MCMCOutput:
    """Run the chain for ``config.n_iterations`` recorded states.

    The first recorded state is the initial point; each later iteration
    records either the accepted proposal or a bitwise copy of the previous
    state.  ``estimator(theta, seed_sequence)`` replaces the particle
    likelihood when given (e.g. an exact likelihood).
    """
    d = model.n_params
    n = config.n_iterations
    names = tuple(model.param_names)
    if n == 0:
        return MCMCOutput(np.empty((0, d)), np.empty((0, d)), np.empty(0), np.zeros(0, bool), 0.0, names)
    if estimator is None:
        estimator = make_estimator(y, config, model=model)
    chol = np.linalg.cholesky(config.proposal_covariance(d))
    chain_rng = generator(seed, 0)

    z0, ll0 = _initialise(config, init_theta, seed, model, estimator)
    state = ChainState(z=z0, cached_avg_loglike=ll0)
    zs = np.empty((n, d))
    lls = np.empty(n)
    acc = np.zeros(n, dtype=bool)
    zs[0], lls[0] = z0, ll0

    for i in range(1, n):
        eps = chain_rng.standard_normal(d)
        u = chain_rng.random()
        z_prop = state.z + chol @ eps
        if math.isfinite(model.log_prior_unconstrained(z_prop)):
            ll_prop = float(estimator(model.from_unconstrained(z_prop), derive(seed, 1, i)))
        else:
            ll_prop = -math.inf
        log_a = acceptance_log_ratio(state, z_prop, ll_prop, model=model)
        log_u = math.log(u) if u > 0.0 else -math.inf
        if log_u < log_a:
            state = ChainState(z_prop, ll_prop, i + 1, state.accepted_count + 1)
            acc[i] = True
        else:
            state = ChainState(state.z, state.cached_avg_loglike, i + 1, state.accepted_count)
        zs[i] = state.z
        lls[i] = state.cached_avg_loglike

    rate = state.accepted_count / (n - 1) if n > 1 else 0.0
    return MCMCOutput(model.from_unconstrained(zs), zs, lls, acc, rate, names)
