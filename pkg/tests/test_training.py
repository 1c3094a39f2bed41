import numpy as np
import pytest

from drslab import (
    CalibrationConfig,
    ConfigError,
    KeepTrainingConfig,
    TrainConfig,
    direct_critic,
    fit_calibration_layer,
    forward,
    generator_sampler,
    hinge_d_loss,
    hinge_g_loss,
    init_network,
    keep_training,
    make_grid_mixture,
    mixture_sample,
    mlp_spec,
    network_critic,
    ns_d_loss,
    ns_g_loss,
    sigmoid,
    train_gan,
)
from drslab.training import TrainedGAN, history_to_csv

TINY_TRAIN = TrainConfig(steps=50, batch_size=32, hidden_width=16, log_every=10)


def finite_diff(loss_fn, logits, h=1e-6):
    grad = np.zeros_like(logits)
    for i in range(logits.size):
        up, down = logits.copy(), logits.copy()
        up[i] += h
        down[i] -= h
        grad[i] = (loss_fn(up) - loss_fn(down)) / (2 * h)
    return grad


def test_ns_d_loss_values():
    loss, _, _ = ns_d_loss(np.zeros(4), np.zeros(4))
    assert loss == pytest.approx(2 * np.log(2), rel=1e-12)
    loss, _, _ = ns_d_loss(np.full(4, 50.0), np.full(4, -50.0))
    assert loss == pytest.approx(0.0, abs=1e-12)


def test_ns_d_loss_gradients_match_finite_differences():
    rng = np.random.default_rng(0)
    for _ in range(5):
        r = rng.uniform(-5, 5, 7)
        f = rng.uniform(-5, 5, 9)
        _, gr, gf = ns_d_loss(r, f)
        num_r = finite_diff(lambda x: ns_d_loss(x, f)[0], r)
        num_f = finite_diff(lambda x: ns_d_loss(r, x)[0], f)
        np.testing.assert_allclose(gr, num_r, rtol=1e-6, atol=1e-10)
        np.testing.assert_allclose(gf, num_f, rtol=1e-6, atol=1e-10)
        # closed form: -(1 - sigmoid(r))/n on the real side
        np.testing.assert_allclose(gr, -(1 - sigmoid(r)) / r.size, rtol=1e-12)


def test_ns_g_loss_values_and_gradients():
    loss, _ = ns_g_loss(np.zeros(3))
    assert loss == pytest.approx(np.log(2), rel=1e-12)
    assert ns_g_loss(np.full(3, 50.0))[0] == pytest.approx(0.0, abs=1e-12)
    rng = np.random.default_rng(1)
    f = rng.uniform(-5, 5, 8)
    _, gf = ns_g_loss(f)
    np.testing.assert_allclose(gf, finite_diff(lambda x: ns_g_loss(x)[0], f),
                               rtol=1e-6, atol=1e-10)


def test_hinge_losses_values_and_gradients():
    loss, _, _ = hinge_d_loss(np.full(3, 2.0), np.full(3, -2.0))
    assert loss == 0.0
    loss, _, _ = hinge_d_loss(np.zeros(3), np.zeros(3))
    assert loss == 2.0
    assert hinge_g_loss(np.zeros(3))[0] == 0.0
    rng = np.random.default_rng(2)
    # stay away from the kinks at -1/+1 where the subgradient is one-sided
    r = rng.uniform(-5, 5, 9)
    f = rng.uniform(-5, 5, 9)
    r = r[np.abs(r - 1.0) > 0.01]
    f = f[np.abs(f + 1.0) > 0.01]
    _, gr, gf = hinge_d_loss(r, f)
    np.testing.assert_allclose(gr, finite_diff(lambda x: hinge_d_loss(x, f)[0], r),
                               rtol=1e-6, atol=1e-10)
    np.testing.assert_allclose(gf, finite_diff(lambda x: hinge_d_loss(r, x)[0], f),
                               rtol=1e-6, atol=1e-10)
    _, gg = hinge_g_loss(f)
    np.testing.assert_allclose(gg, finite_diff(lambda x: hinge_g_loss(x)[0], f),
                               rtol=1e-6, atol=1e-10)


def test_hinge_subgradient_is_zero_at_kink():
    _, gr, gf = hinge_d_loss(np.array([1.0]), np.array([-1.0]))
    assert gr[0] == 0.0 and gf[0] == 0.0


def test_train_config_validation():
    with pytest.raises(ConfigError):
        TrainConfig(loss_kind="wasserstein")
    with pytest.raises(ConfigError):
        TrainConfig(batch_size=0)


def test_train_gan_is_deterministic_and_shaped():
    mix = make_grid_mixture(2, 2, 2.0, 0.1)
    a = train_gan(mix, TINY_TRAIN, seed=0)
    b = train_gan(mix, TINY_TRAIN, seed=0)
    assert a.history == b.history
    for wa, wb in zip(a.generator.weights, b.generator.weights):
        np.testing.assert_array_equal(wa, wb)
    c = train_gan(mix, TINY_TRAIN, seed=1)
    assert c.history != a.history
    steps = [h[0] for h in a.history]
    assert steps == sorted(set(steps)) and steps[-1] == TINY_TRAIN.steps
    assert a.generator.input_dim == TINY_TRAIN.latent_dim
    assert a.discriminator.output_dim == 1
    assert all(np.isfinite(v) for row in a.history for v in row[1:])


def test_train_gan_hinge_variant_runs():
    mix = make_grid_mixture(2, 2, 2.0, 0.1)
    gan = train_gan(mix, TrainConfig(steps=30, batch_size=16, hidden_width=8,
                                     loss_kind="hinge", log_every=10), seed=3)
    assert gan.loss_kind == "hinge"
    assert len(gan.history) >= 3


def test_keep_training_patience_zero_returns_input():
    mix = make_grid_mixture(2, 2, 2.0, 0.1)
    gan = train_gan(mix, TINY_TRAIN, seed=0)
    out = keep_training(gan, mix, KeepTrainingConfig(patience=0), seed=1)
    for a, b in zip(out.weights, gan.discriminator.weights):
        np.testing.assert_array_equal(a, b)
    # a copy, not the same object: refining later must not mutate the input
    out.weights[0][0, 0] += 1.0
    assert out.weights[0][0, 0] != gan.discriminator.weights[0][0, 0]


def test_keep_training_never_worsens_validation_loss():
    mix = make_grid_mixture(2, 2, 2.0, 0.1)
    gan = train_gan(mix, TINY_TRAIN, seed=4)
    cfg = KeepTrainingConfig(max_steps=300, batch_size=32, val_size=500,
                             eval_every=50, patience=2)
    refined = keep_training(gan, mix, cfg, seed=5)

    # recompute the validation loss on the same deterministic validation set
    rng = np.random.default_rng(np.random.SeedSequence(5))
    from drslab import PriorSpec, prior_sample
    prior = PriorSpec(dim=gan.generator.input_dim)
    val_real = mixture_sample(mix, rng, cfg.val_size)
    val_fake = forward(gan.generator, prior_sample(rng, cfg.val_size, prior)).output

    def val_loss(d):
        r = forward(d, val_real).output[:, 0]
        f = forward(d, val_fake).output[:, 0]
        return ns_d_loss(r, f)[0]

    assert val_loss(refined) <= val_loss(gan.discriminator) + 1e-12


def test_keep_training_with_equal_distributions_keeps_logits_near_zero():
    # fake sampler == real sampler: optimal critic output is identically 1/2
    mix = make_grid_mixture(2, 2, 2.0, 0.2)
    gen = init_network(mlp_spec([2, 8, 2]), seed=0)
    disc = init_network(mlp_spec([2, 16, 16, 1]), seed=1)
    gan = TrainedGAN(generator=gen, discriminator=disc, history=[],
                     loss_kind="non_saturating")
    cfg = KeepTrainingConfig(max_steps=2000, batch_size=64, val_size=2000,
                             eval_every=100, patience=5, learning_rate=1e-3)
    refined = keep_training(
        gan, mix, cfg, seed=6, fake_sampler=lambda rng, n: mixture_sample(mix, rng, n)
    )
    rng = np.random.default_rng(0)
    logits = forward(refined, mixture_sample(mix, rng, 2000)).output
    r = forward(refined, mixture_sample(mix, rng, 2000)).output[:, 0]
    f = forward(refined, mixture_sample(mix, rng, 2000)).output[:, 0]
    loss = ns_d_loss(r, f)[0]
    assert abs(loss - 2 * np.log(2)) < 0.05
    assert np.abs(logits).mean() < 0.35


def test_calibration_recovers_identity_when_logits_are_true():
    # base logits equal the true log density ratio of two separable clouds;
    # logistic regression on them should keep the head near (1, 0)
    rng = np.random.default_rng(8)
    net = init_network(mlp_spec([2, 1]), seed=0)
    net.weights[0][:] = np.array([[2.0, 0.0]])  # logit = 2*x1: ratio of two unit
    net.biases[0][:] = 0.0                      # Gaussians at x1 = +-1
    real = rng.normal(loc=[1.0, 0.0], scale=1.0, size=(4000, 2))
    fake = rng.normal(loc=[-1.0, 0.0], scale=1.0, size=(4000, 2))
    critic = fit_calibration_layer(net, real, fake, CalibrationConfig())
    assert critic.kind == "calibrated"
    assert critic.weight == pytest.approx(1.0, abs=0.1)
    assert critic.bias == pytest.approx(0.0, abs=0.1)


def test_calibration_flips_sign_inverted_critic():
    rng = np.random.default_rng(9)
    net = init_network(mlp_spec([2, 1]), seed=0)
    net.weights[0][:] = np.array([[-2.0, 0.0]])  # anti-correlated with the label
    net.biases[0][:] = 0.0
    real = rng.normal(loc=[1.0, 0.0], scale=1.0, size=(2000, 2))
    fake = rng.normal(loc=[-1.0, 0.0], scale=1.0, size=(2000, 2))
    critic = fit_calibration_layer(net, real, fake)
    assert critic.weight < 0.0


def test_calibration_rejects_empty_batch():
    net = init_network(mlp_spec([2, 1]), seed=0)
    with pytest.raises(ConfigError):
        fit_calibration_layer(net, np.zeros((0, 2)), np.zeros((5, 2)))


def test_direct_critic_is_identity_head():
    net = init_network(mlp_spec([2, 4, 1]), seed=2)
    critic = direct_critic(net)
    assert critic.kind == "direct" and critic.weight == 1.0 and critic.bias == 0.0
    pts = np.random.default_rng(0).standard_normal((10, 2))
    np.testing.assert_array_equal(critic(pts), forward(net, pts).output[:, 0])
    np.testing.assert_array_equal(critic(pts), network_critic(net)(pts))


def test_calibrated_critic_preserves_ranking_for_positive_weight():
    net = init_network(mlp_spec([2, 8, 1]), seed=3)
    pts = np.random.default_rng(1).standard_normal((50, 2))
    base = network_critic(net)(pts)
    from drslab import CalibratedCritic
    calibrated = CalibratedCritic(base=net, weight=2.5, bias=-0.7, kind="calibrated")
    np.testing.assert_array_equal(np.argsort(calibrated(pts)), np.argsort(base))


def test_generator_sampler_returns_points_and_latents():
    gen = init_network(mlp_spec([2, 8, 2]), seed=4)
    sampler = generator_sampler(gen)
    points, latents = sampler(np.random.default_rng(5), 17)
    assert points.shape == (17, 2) and latents.shape == (17, 2)
    np.testing.assert_allclose(points, forward(gen, latents).output, rtol=0, atol=0)


def test_history_csv_format(tmp_path):
    path = tmp_path / "history.csv"
    history_to_csv([(0, 1.5, 2.5), (10, 1.25, 2.25)], path)
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "step,d_loss,g_loss"
    assert lines[1].split(",") == ["0", "1.5", "2.5"]
