import math

import numpy as np
import pytest

from smcforecast.diagnostics import batch_means_se
from smcforecast.filters import SISRFilter
from smcforecast.lgssm import LinearGaussianModel, kalman_loglik
from smcforecast.model import SV
from smcforecast.pmmh import (
    ChainState,
    InitializationError,
    ProposalConfig,
    acceptance_log_ratio,
    averaged_log_likelihood,
    pmmh_run,
)
from smcforecast.rng import NoiseSource, derive, generator

from oracles import exact_estimator, standard_mh


@pytest.fixture(scope="module")
def lg():
    m = LinearGaussianModel()
    return m, m.simulate(0.8, 60, generator(21))[1]


def test_proposal_config_validation():
    assert np.allclose(ProposalConfig().proposal_covariance(4), np.eye(4) * 2.38**2 / 4)
    with pytest.raises(ValueError):
        ProposalConfig(n_filter_replicates=0)
    with pytest.raises(np.linalg.LinAlgError):
        ProposalConfig(covariance=np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(ValueError):
        ProposalConfig(covariance=np.array([[1.0, 0.5], [0.4, 1.0]]))


def test_averaged_k1_equals_single_sisr(theta, sv_data):
    seed = derive(4, 1, 7)
    total = 0.0
    for r in SISRFilter(theta, 100, NoiseSource(seed, 0)).run(sv_data):
        total += r.log_cond_evidence
    assert averaged_log_likelihood(theta, sv_data, 1, 100, seed) == total


def test_averaged_is_log_mean_exp_of_replicates(theta, sv_data):
    seed = 5
    singles = [sum(r.log_cond_evidence for r in SISRFilter(theta, 50, NoiseSource(seed, k)).run(sv_data))
               for k in range(4)]
    ref = np.log(np.mean(np.exp(np.array(singles) - max(singles)))) + max(singles)
    assert averaged_log_likelihood(theta, sv_data, 4, 50, seed) == pytest.approx(ref, abs=1e-9)


def test_averaged_workers_identical(theta, sv_data):
    a = averaged_log_likelihood(theta, sv_data, 7, 50, 3, workers=1)
    b = averaged_log_likelihood(theta, sv_data, 7, 50, 3, workers=3)
    assert a == b


def test_averaged_all_degenerate_is_minus_inf():
    m = LinearGaussianModel(r=1e-300)
    assert averaged_log_likelihood([0.5], np.array([1e10]), 3, 10, 0, model=m) == -math.inf


def test_acceptance_ratio_examples():
    z = SV.to_unconstrained(np.array([0.0, 0.9, 0.05, -0.3]))
    cur = ChainState(z, -100.0)
    assert acceptance_log_ratio(cur, z, -100.0) == 0.0
    assert acceptance_log_ratio(cur, z, -100.0 + math.log(2)) == pytest.approx(math.log(2))
    out = z.copy()
    out[1] = 200.0  # phi rounds to 1: outside the support
    assert acceptance_log_ratio(cur, out, -50.0) == -math.inf
    assert acceptance_log_ratio(cur, z, -math.inf) == -math.inf


def test_zero_iterations():
    out = pmmh_run(np.zeros(5), ProposalConfig(n_iterations=0))
    assert len(out) == 0 and out.acceptance_rate == 0.0 and out.samples.shape == (0, 4)


def test_exact_oracle_matches_standard_mh(lg):
    m, y = lg
    cov = np.eye(1) * 0.5
    cfg = ProposalConfig(n_iterations=500, covariance=cov)
    out = pmmh_run(y, cfg, init_theta=[0.3], seed=8, model=m, estimator=exact_estimator(m, y))
    ref = standard_mh(y, m, m.to_unconstrained(np.array([0.3])), 500, 8, cov)
    assert np.array_equal(out.unconstrained, ref)


def test_estimator_calls_once_per_proposal(lg):
    m, y = lg
    calls = []

    def counting(theta, seed):
        calls.append(seed)
        return kalman_loglik(m, theta[0], y)

    out = pmmh_run(y, ProposalConfig(n_iterations=200, covariance=np.eye(1) * 0.5), init_theta=[0.3], seed=2,
                   model=m, estimator=counting)
    assert len(calls) == 1 + (len(out) - 1)


def test_rejections_copy_previous_state_bitwise(theta, sv_data):
    out = pmmh_run(sv_data, ProposalConfig(n_iterations=60, n_state_particles=30, n_filter_replicates=2),
                   init_theta=theta, seed=1)
    assert 0.0 <= out.acceptance_rate <= 1.0
    for i in np.flatnonzero(~out.accepted[1:]) + 1:
        assert np.array_equal(out.unconstrained[i], out.unconstrained[i - 1])
        assert out.avg_loglike[i] == out.avg_loglike[i - 1]
    SV.check(out.samples)
    assert out.acceptance_rate == pytest.approx(out.accepted[1:].mean())


def test_cached_likelihood_is_reused(theta, sv_data):
    # between acceptances the recorded likelihood never changes, so it was not re-estimated
    out = pmmh_run(sv_data, ProposalConfig(n_iterations=40, n_state_particles=30, n_filter_replicates=2),
                   init_theta=theta, seed=6)
    for i in range(1, len(out)):
        if not out.accepted[i]:
            assert out.avg_loglike[i] == out.avg_loglike[i - 1]


def test_deterministic(theta, sv_data):
    cfg = ProposalConfig(n_iterations=30, n_state_particles=20, n_filter_replicates=2)
    a = pmmh_run(sv_data, cfg, seed=4)
    b = pmmh_run(sv_data, cfg, seed=4)
    assert np.array_equal(a.samples, b.samples) and np.array_equal(a.avg_loglike, b.avg_loglike)


def test_prior_initialisation_and_failure():
    out = pmmh_run(np.array([0.1, -0.2, 0.3]), ProposalConfig(n_iterations=3, n_state_particles=10), seed=0)
    assert np.isfinite(out.avg_loglike).all()
    m = LinearGaussianModel(r=1e-300)
    with pytest.raises(InitializationError):
        pmmh_run(np.array([1e10]), ProposalConfig(n_iterations=3, n_state_particles=5, max_init_tries=4),
                 seed=0, model=m)
    with pytest.raises(InitializationError):
        pmmh_run(np.zeros(3), ProposalConfig(n_iterations=3), init_theta=[0.0, 0.5, -1.0, 0.0])


def test_discard_post_processing():
    from smcforecast.pmmh import MCMCOutput

    n = 100
    out = MCMCOutput(np.arange(n, dtype=float)[:, None], np.zeros((n, 1)), np.zeros(n), np.zeros(n, bool), 0.5)
    kept = out.discard()
    assert len(kept) == 90 and kept.samples[0, 0] == 10
    assert len(out.discard(0.0, 3)) == 34


def test_lgssm_pmmh_mean_agrees_with_exact_mh(lg):
    m, y = lg
    cov = np.eye(1) * 0.5
    noisy = pmmh_run(y, ProposalConfig(n_iterations=2000, covariance=cov), init_theta=[0.7], seed=12, model=m)
    ref = pmmh_run(y, ProposalConfig(n_iterations=2000, covariance=cov), init_theta=[0.7], seed=13, model=m,
                   estimator=exact_estimator(m, y))
    a = noisy.discard().samples[:, 0]
    b = ref.discard().samples[:, 0]
    se = math.hypot(batch_means_se(a), batch_means_se(b))
    assert abs(a.mean() - b.mean()) < 3 * se


def test_sv_case_study_acceptance_in_open_interval(sv_data):
    out = pmmh_run(sv_data, ProposalConfig(n_iterations=300), seed=3)
    assert 0.0 < out.acceptance_rate < 1.0
