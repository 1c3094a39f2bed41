import numpy as np
import pytest
from scipy import stats

from drslab import (
    ConfigError,
    ContractError,
    DRSConfig,
    EnvelopeError,
    LowAcceptanceError,
    MaxEstimate,
    NumericError,
    acceptance_prob,
    burn_in,
    density_ratio,
    drs_sample,
    exact_rejection_sample,
    f_hat,
    hard_threshold_filter,
    nearest_rank_percentile,
    select_gamma,
    sigmoid,
    threshold_for_rate,
)


def gaussian_pdf(x):
    return np.exp(-0.5 * x * x) / np.sqrt(2 * np.pi)


def uniform_sampler(rng, n):
    return rng.uniform(-5, 5, n)


def uniform_density(x):
    return np.full(np.shape(x), 0.1)


GAUSS_BOUND = float(gaussian_pdf(np.zeros(1))[0] / 0.1)  # sup ratio on [-5, 5]


def test_density_ratio_values_and_saturation():
    assert density_ratio(0.0) == 1.0
    assert density_ratio(np.log(2.0)) == pytest.approx(2.0, rel=1e-15)
    assert density_ratio(-np.log(4.0)) == pytest.approx(0.25, rel=1e-15)
    with pytest.warns(RuntimeWarning):
        out = density_ratio(800.0)
    assert np.isfinite(out)
    with pytest.raises(NumericError):
        density_ratio(np.nan)


def test_f_hat_matches_direct_formula_and_examples():
    # delta = -ln 2, tiny epsilon: f = -ln2 - ln(1 - 1/2) = 0, acceptance 1/2
    f = f_hat(-np.log(2.0), 0.0, 1e-12, 0.0)
    assert f == pytest.approx(0.0, abs=1e-9)
    assert acceptance_prob(f) == pytest.approx(0.5, abs=1e-9)
    # at the maximum with epsilon 1e-6 the value is -log(1 - e^-1e-6)
    f_top = f_hat(3.0, 3.0, 1e-6, 0.0)
    assert f_top == pytest.approx(13.8155, abs=1e-3)
    assert acceptance_prob(f_top) == pytest.approx(0.999999, abs=1e-6)
    # gamma shifts the sigmoid input directly
    assert f_hat(3.0, 3.0, 1e-6, 13.8155) == pytest.approx(f_top - 13.8155, rel=1e-12)


def test_f_hat_identity_with_exponential_ratio():
    # sigmoid(f_hat(d, dM, eps->0, 0)) = e^(d - dM), the defining identity
    rng = np.random.default_rng(0)
    d_m = rng.uniform(-5, 5, 1000)
    delta = -np.exp(rng.uniform(np.log(1e-3), np.log(20.0), 1000))
    probs = acceptance_prob(f_hat(d_m + delta, d_m, 1e-12, 0.0))
    np.testing.assert_allclose(probs, np.exp(delta), rtol=1e-9)


def test_f_hat_monotone_in_logit():
    logits = np.linspace(-30, 0, 500)
    f = f_hat(logits, 0.0, 1e-6, 0.0)
    assert np.all(np.diff(f) > 0)


def test_f_hat_rejects_logit_above_max():
    with pytest.raises(ContractError):
        f_hat(1.0 + 1e-9, 1.0, 1e-6, 0.0)
    with pytest.raises(ConfigError):
        f_hat(0.0, 1.0, 0.0, 0.0)


def test_max_estimate_monotone_updates():
    est = MaxEstimate(max_logit=1.0)
    assert est.observe(np.array([0.5, 0.9])) is False
    assert est.max_logit == 1.0 and est.update_count == 0
    assert est.observe(np.array([0.5, 2.0])) is True
    assert est.max_logit == 2.0 and est.update_count == 1
    est.observe(np.array([1.5]))
    assert est.max_logit == 2.0  # never decreases


def test_burn_in_takes_max_over_exactly_n_draws():
    calls = []

    def sampler(rng, n):
        calls.append(n)
        return rng.uniform(-5, 5, n)

    def critic(x):
        return np.asarray(x, dtype=np.float64)  # logit = the point itself

    rng = np.random.default_rng(1)
    est = burn_in(sampler, critic, 2500, rng, batch_size=1000)
    assert sum(calls) == 2500
    assert est.update_count == 0
    assert -5 <= est.max_logit <= 5
    # the true max over a much larger draw is only slightly above the estimate
    big = np.max(rng.uniform(-5, 5, 10 ** 6))
    assert big - est.max_logit < 0.05


def test_burn_in_constant_critic():
    est = burn_in(lambda rng, n: rng.uniform(0, 1, n), lambda x: np.full(len(x), 3.0),
                  100, np.random.default_rng(0))
    assert est.max_logit == 3.0


def test_nearest_rank_percentile_examples():
    values = np.arange(1, 101, dtype=float)
    assert nearest_rank_percentile(values, 95.0) == 95.0
    assert nearest_rank_percentile(values, 100.0) == 100.0
    assert nearest_rank_percentile(values, 0.0) == 1.0
    shuffled = np.random.default_rng(0).permutation(values)
    assert nearest_rank_percentile(shuffled, 95.0) == 95.0
    assert nearest_rank_percentile(np.array([7.0]), 50.0) == 7.0
    with pytest.raises(ContractError):
        nearest_rank_percentile(np.array([]), 50.0)
    with pytest.raises(ConfigError):
        nearest_rank_percentile(values, 101.0)


def test_select_gamma_policies():
    cfg_fixed = DRSConfig(gamma_mode="fixed", gamma_value=-3.25)
    assert select_gamma(np.array([1.0, 2.0]), cfg_fixed) == -3.25
    cfg_pct = DRSConfig(gamma_mode="percentile", gamma_value=95.0)
    values = np.arange(1, 101, dtype=float)
    assert select_gamma(values, cfg_pct) == 95.0
    # applying the returned gamma leaves exactly n - ceil(p*n/100) values above 0
    gamma = select_gamma(values, cfg_pct)
    assert int(np.sum(values - gamma > 0)) == 100 - 95
    with pytest.raises(ContractError):
        select_gamma(np.array([]), cfg_pct)


def test_drs_config_validation():
    with pytest.raises(ConfigError):
        DRSConfig(epsilon=0.0)
    with pytest.raises(ConfigError):
        DRSConfig(gamma_mode="adaptive")
    with pytest.raises(ConfigError):
        DRSConfig(gamma_mode="percentile", gamma_value=120.0)
    DRSConfig(gamma_mode="fixed", gamma_value=120.0)  # fixed gamma is unbounded


def oracle_critic(x):
    return np.log(gaussian_pdf(x)) - np.log(0.1)


def test_drs_sample_accepted_count_and_log_consistency():
    cfg = DRSConfig(epsilon=1e-6, gamma_mode="fixed", gamma_value=0.0,
                    burn_in_count=1000, target_count=500, batch_size=200)
    result = drs_sample(uniform_sampler, oracle_critic, cfg, np.random.default_rng(2))
    assert len(result.accepted_indices) == 500
    assert result.accepted_points.shape == (500,)
    log = result.log
    assert result.n_proposed == len(log)
    assert result.n_accepted == int(log.accepted.sum()) >= 500
    # acceptance decisions are exactly psi <= sigmoid(f)
    np.testing.assert_array_equal(log.accepted, log.psis <= log.acceptance_probs)
    np.testing.assert_allclose(log.acceptance_probs, sigmoid(log.f_values), rtol=1e-15)
    assert np.all(log.logits <= result.max_estimate.max_logit)
    assert np.all((log.psis >= 0) & (log.psis < 1))
    assert np.all(log.acceptance_probs > 0)  # finite logits never hard-reject


def test_drs_sample_batch_bookkeeping():
    cfg = DRSConfig(gamma_mode="percentile", gamma_value=50.0, burn_in_count=100,
                    target_count=300, batch_size=100)
    result = drs_sample(uniform_sampler, oracle_critic, cfg, np.random.default_rng(3))
    log = result.log
    assert len(log) % 100 == 0
    # batch indices are 0,1,2,... each repeated batch_size times
    np.testing.assert_array_equal(
        log.batch_indices, np.repeat(np.arange(len(log) // 100), 100))
    # gamma is constant within a batch and equals the batch median of gamma-free f
    for b in range(len(log) // 100):
        sl = slice(100 * b, 100 * (b + 1))
        gammas = log.gammas[sl]
        assert np.all(gammas == gammas[0])
        f_free = log.f_values[sl] + gammas[0]  # reconstruct the gamma-free values
        assert gammas[0] == pytest.approx(nearest_rank_percentile(f_free, 50.0), rel=1e-12)


def test_drs_sample_constant_critic_percentile_accepts_half():
    cfg = DRSConfig(gamma_mode="percentile", gamma_value=50.0, burn_in_count=100,
                    target_count=2000, batch_size=500)
    result = drs_sample(uniform_sampler, lambda x: np.full(len(x), 2.0), cfg,
                        np.random.default_rng(4))
    # constant logits: every f equals the percentile, sigmoid(0) = 1/2 everywhere
    np.testing.assert_allclose(result.log.acceptance_probs, 0.5, rtol=0, atol=0)
    assert result.acceptance_rate == pytest.approx(0.5, abs=0.05)


def test_drs_sample_gamma_limits_and_support():
    # very negative gamma accepts everything; very positive nearly nothing
    lo = DRSConfig(gamma_mode="fixed", gamma_value=-40.0, burn_in_count=100,
                   target_count=1000, batch_size=500)
    result = drs_sample(uniform_sampler, oracle_critic, lo, np.random.default_rng(5))
    assert result.acceptance_rate > 1.0 - 1e-4

    hi = DRSConfig(gamma_mode="fixed", gamma_value=40.0, burn_in_count=100,
                   target_count=1, batch_size=1000, min_acceptance_rate=0.0)
    result = drs_sample(uniform_sampler, oracle_critic, hi, np.random.default_rng(6),
                        max_draws=100_000)
    assert result.acceptance_rate < 1e-4
    assert np.all(result.log.acceptance_probs > 0.0)


def test_drs_sample_initial_max_skips_burn_in():
    draws = []

    def counting_sampler(rng, n):
        draws.append(n)
        return rng.uniform(-5, 5, n)

    cfg = DRSConfig(gamma_mode="fixed", gamma_value=0.0, burn_in_count=10_000,
                    target_count=100, batch_size=100)
    result = drs_sample(counting_sampler, oracle_critic, cfg, np.random.default_rng(7),
                        initial_max_logit=float(np.log(GAUSS_BOUND)))
    assert sum(draws) == result.n_proposed  # no burn-in draws happened
    assert result.max_estimate.max_logit == pytest.approx(np.log(GAUSS_BOUND))
    assert result.max_estimate.update_count == 0  # the bound is never exceeded


def test_drs_sample_max_updates_before_batch_acceptance():
    # critic grows with the draw index, so each batch's top logit raises the max;
    # every batch must then satisfy logit <= max with f finite
    state = {"count": 0}

    def rising_critic(x):
        n = len(x)
        out = np.linspace(state["count"], state["count"] + 1, n)
        state["count"] += 1
        return out

    cfg = DRSConfig(gamma_mode="fixed", gamma_value=0.0, burn_in_count=50,
                    target_count=400, batch_size=100)
    result = drs_sample(uniform_sampler_points, rising_critic, cfg,
                        np.random.default_rng(8))
    assert result.max_estimate.update_count == len(result.log) // 100
    assert np.all(np.isfinite(result.log.f_values))


def uniform_sampler_points(rng, n):
    return rng.uniform(-5, 5, n)


def test_drs_sample_low_acceptance_abort():
    cfg = DRSConfig(gamma_mode="fixed", gamma_value=40.0, burn_in_count=100,
                    target_count=10, batch_size=1000,
                    min_acceptance_rate=1e-4, rate_window=5000)
    with pytest.raises(LowAcceptanceError):
        drs_sample(uniform_sampler, oracle_critic, cfg, np.random.default_rng(9))


def test_drs_sample_rejects_nonfinite_critic():
    cfg = DRSConfig(burn_in_count=10, target_count=10, batch_size=10)
    with pytest.raises(NumericError):
        drs_sample(uniform_sampler, lambda x: np.full(len(x), np.nan), cfg,
                   np.random.default_rng(10))


def test_drs_sample_accepts_latent_returning_samplers():
    def sampler(rng, n):
        z = rng.standard_normal((n, 2))
        return z * 2.0, z

    cfg = DRSConfig(gamma_mode="fixed", gamma_value=0.0, burn_in_count=50,
                    target_count=100, batch_size=50)
    result = drs_sample(sampler, lambda x: -np.linalg.norm(x, axis=1), cfg,
                        np.random.default_rng(11))
    log = result.log
    assert log.latents.shape == log.points.shape
    np.testing.assert_allclose(log.points, 2.0 * log.latents, rtol=0, atol=0)
    assert result.accepted.points.shape == (100, 2)


def test_sample_log_csv_round_trip(tmp_path):
    def sampler(rng, n):
        z = rng.standard_normal((n, 2))
        return z, z

    cfg = DRSConfig(gamma_mode="percentile", gamma_value=80.0, burn_in_count=20,
                    target_count=30, batch_size=20)
    result = drs_sample(sampler, lambda x: -np.linalg.norm(x, axis=1), cfg,
                        np.random.default_rng(12))
    path = tmp_path / "log.csv"
    result.log.to_csv(path)
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "x,y,z1,z2,logit,f_value,acceptance_prob,psi,accepted,batch_index,gamma_used"
    assert len(lines) == len(result.log) + 1
    first = lines[1].split(",")
    assert float(first[0]) == result.log.points[0, 0]
    assert first[8] in ("0", "1")
    # float fields round-trip exactly through repr
    assert float(first[6]) == result.log.acceptance_probs[0]


def test_exact_rejection_sampling_matches_target():
    rng = np.random.default_rng(13)
    result = exact_rejection_sample(
        uniform_sampler, uniform_density, gaussian_pdf, GAUSS_BOUND, 10_000, rng)
    assert len(result.samples) == 10_000
    ks = stats.kstest(result.samples, "norm")
    assert ks.pvalue >= 0.01
    assert result.acceptance_rate == pytest.approx(1.0 / GAUSS_BOUND, abs=0.01)


def test_exact_rejection_identity_proposal_accepts_everything():
    rng = np.random.default_rng(14)
    result = exact_rejection_sample(
        lambda r, n: r.standard_normal(n), gaussian_pdf, gaussian_pdf, 1.0, 500, rng)
    assert len(result.samples) == 500
    assert result.n_accepted == result.n_proposed  # probability-1 acceptance
    assert result.acceptance_rate == 1.0


def test_exact_rejection_envelope_violation_raises():
    with pytest.raises(EnvelopeError):
        exact_rejection_sample(
            uniform_sampler, uniform_density, gaussian_pdf, GAUSS_BOUND / 2.0, 100,
            np.random.default_rng(15))


def test_hard_threshold_filter_edges():
    logits = np.array([-2.0, 0.0, 3.0])
    np.testing.assert_array_equal(hard_threshold_filter(logits, -np.inf),
                                  [True, True, True])
    np.testing.assert_array_equal(hard_threshold_filter(logits, 3.0 + 1e-12),
                                  [False, False, False])
    np.testing.assert_array_equal(hard_threshold_filter(logits, 0.0),
                                  [False, True, True])


def test_threshold_for_rate_examples():
    logits = np.arange(1, 101, dtype=float)
    threshold, rate = threshold_for_rate(logits, 0.25)
    assert threshold == 76.0 and rate == 0.25
    threshold, rate = threshold_for_rate(logits, 1.0)
    assert threshold == 1.0 and rate == 1.0
    threshold, rate = threshold_for_rate(np.full(10, 2.5), 0.3)
    assert threshold == 2.5 and rate == 1.0
    with pytest.raises(ConfigError):
        threshold_for_rate(logits, 0.0)


def test_thresholding_distorts_tails_while_exact_rs_does_not():
    # keep-rate matched to exact RS, but thresholding clips the tails and the
    # KS test catches the distortion
    rng = np.random.default_rng(16)
    pool = uniform_sampler(rng, 40_000)
    logits = oracle_critic(pool)
    threshold, _ = threshold_for_rate(logits, 1.0 / GAUSS_BOUND)
    kept = pool[hard_threshold_filter(logits, threshold)]
    assert stats.kstest(kept, "norm").pvalue < 0.01
