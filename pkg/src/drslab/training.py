"""GAN training on the mixture benchmark.

Covers the two adversarial losses (non-saturating and hinge), the alternating
training loop, continued discriminator training with early stopping, and the
affine calibration head that turns a hinge critic into a sigmoid-logit critic.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import ConfigError, NumericError, TrainingDivergedError
from .mixtures import MixtureSpec, PriorSpec, mixture_sample, prior_sample
from .nets import (
    AdamHyper,
    NetworkParams,
    adam_step,
    backward,
    forward,
    init_adam,
    init_network,
    mlp_spec,
)
from .numerics import sigmoid, softplus

LOSS_KINDS = ("non_saturating", "hinge")


def ns_d_loss(real_logits, fake_logits):
    """Non-saturating discriminator loss and its analytic gradients.

    loss = -mean(log sigma(real)) - mean(log(1 - sigma(fake))), evaluated via
    softplus so finite logits never produce NaN.
    """
    r = np.asarray(real_logits, dtype=np.float64)
    f = np.asarray(fake_logits, dtype=np.float64)
    loss = softplus(-r).mean() + softplus(f).mean()
    grad_real = -sigmoid(-r) / r.size
    grad_fake = sigmoid(f) / f.size
    return float(loss), grad_real, grad_fake


def ns_g_loss(fake_logits):
    """Non-saturating generator loss -mean(log sigma(fake)) and gradient."""
    f = np.asarray(fake_logits, dtype=np.float64)
    loss = softplus(-f).mean()
    grad_fake = -sigmoid(-f) / f.size
    return float(loss), grad_fake


def hinge_d_loss(real_logits, fake_logits):
    """Margin loss mean(max(0, 1-real)) + mean(max(0, 1+fake)); subgradient 0 at the kink."""
    r = np.asarray(real_logits, dtype=np.float64)
    f = np.asarray(fake_logits, dtype=np.float64)
    loss = np.maximum(0.0, 1.0 - r).mean() + np.maximum(0.0, 1.0 + f).mean()
    grad_real = -((1.0 - r) > 0.0).astype(np.float64) / r.size
    grad_fake = ((1.0 + f) > 0.0).astype(np.float64) / f.size
    return float(loss), grad_real, grad_fake


def hinge_g_loss(fake_logits):
    """-mean(fake) and its (constant) gradient."""
    f = np.asarray(fake_logits, dtype=np.float64)
    loss = -f.mean()
    grad_fake = np.full(f.shape, -1.0 / f.size)
    return float(loss), grad_fake


@dataclass(frozen=True)
class TrainConfig:
    steps: int = 20_000
    batch_size: int = 256
    loss_kind: str = "non_saturating"
    latent_dim: int = 2
    hidden_width: int = 128
    num_hidden: int = 3
    d_learning_rate: float = 2e-4
    g_learning_rate: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.999
    log_every: int = 100
    # mode-coverage aids: scale the generator's output-layer init so the first
    # sample cloud spans the grid, and blur both discriminator input streams
    # with annealed Gaussian noise so its gradients stay informative everywhere
    output_gain: float = 3.0
    instance_noise: float = 1.0
    noise_anneal_frac: float = 1.0

    def __post_init__(self):
        if self.loss_kind not in LOSS_KINDS:
            raise ConfigError(f"loss_kind must be one of {LOSS_KINDS}")
        if self.steps < 0 or self.batch_size < 1 or self.log_every < 1:
            raise ConfigError("steps must be >= 0, batch_size and log_every >= 1")
        if self.output_gain <= 0.0 or self.instance_noise < 0.0:
            raise ConfigError("output_gain must be > 0 and instance_noise >= 0")
        if not 0.0 < self.noise_anneal_frac <= 1.0:
            raise ConfigError("noise_anneal_frac must be in (0, 1]")


@dataclass
class TrainedGAN:
    generator: NetworkParams
    discriminator: NetworkParams
    history: list  # (step, d_loss, g_loss)
    loss_kind: str


def _d_loss_fn(kind):
    return ns_d_loss if kind == "non_saturating" else hinge_d_loss


def _g_loss_fn(kind):
    return ns_g_loss if kind == "non_saturating" else hinge_g_loss


def train_gan(mixture: MixtureSpec, config: TrainConfig, seed: int) -> TrainedGAN:
    """Alternating 1:1 discriminator/generator updates; deterministic per seed."""
    g_seed, d_seed, loop_seed = (int(s) for s in np.random.SeedSequence(seed).generate_state(3))
    data_dim = mixture.dim
    gen = init_network(
        mlp_spec([config.latent_dim] + [config.hidden_width] * config.num_hidden + [data_dim]),
        g_seed,
    )
    gen.weights[-1] *= config.output_gain
    disc = init_network(
        mlp_spec([data_dim] + [config.hidden_width] * config.num_hidden + [1]),
        d_seed,
    )
    d_state = init_adam(disc, AdamHyper(config.d_learning_rate, config.beta1, config.beta2))
    g_state = init_adam(gen, AdamHyper(config.g_learning_rate, config.beta1, config.beta2))
    rng = np.random.default_rng(loop_seed)
    prior = PriorSpec(dim=config.latent_dim)
    d_loss_fn = _d_loss_fn(config.loss_kind)
    g_loss_fn = _g_loss_fn(config.loss_kind)

    n = config.batch_size
    anneal_steps = config.steps * config.noise_anneal_frac
    history = []
    for step in range(1, config.steps + 1):
        sigma = 0.0
        if config.instance_noise > 0.0:
            sigma = config.instance_noise * max(0.0, 1.0 - step / anneal_steps)

        # discriminator update
        real = mixture_sample(mixture, rng, n)
        z = prior_sample(rng, n, prior)
        fake = forward(gen, z).output
        d_in = np.concatenate([real, fake])
        if sigma > 0.0:
            d_in = d_in + sigma * rng.standard_normal(d_in.shape)
        tape = forward(disc, d_in)
        logits = tape.output[:, 0]
        d_loss, grad_r, grad_f = d_loss_fn(logits[:n], logits[n:])
        d_grads, _ = backward(disc, tape, np.concatenate([grad_r, grad_f])[:, None])
        disc, d_state = adam_step(disc, d_grads, d_state)

        # generator update (noise enters after G, so its gradient passes through)
        z = prior_sample(rng, n, prior)
        g_tape = forward(gen, z)
        g_out = g_tape.output
        if sigma > 0.0:
            g_out = g_out + sigma * rng.standard_normal(g_out.shape)
        d_tape = forward(disc, g_out)
        g_loss, grad_f = g_loss_fn(d_tape.output[:, 0])
        _, dx = backward(disc, d_tape, grad_f[:, None])
        g_grads, _ = backward(gen, g_tape, dx)
        gen, g_state = adam_step(gen, g_grads, g_state)

        if not (np.isfinite(d_loss) and np.isfinite(g_loss)):
            raise TrainingDivergedError(step, f"d_loss={d_loss}, g_loss={g_loss}")
        if step % config.log_every == 0 or step == config.steps:
            history.append((step, d_loss, g_loss))

    return TrainedGAN(generator=gen, discriminator=disc, history=history, loss_kind=config.loss_kind)


@dataclass(frozen=True)
class KeepTrainingConfig:
    max_steps: int = 5_000
    batch_size: int = 256
    val_size: int = 10_000
    eval_every: int = 100
    patience: int = 10
    learning_rate: float = 1e-4
    beta1: float = 0.5
    beta2: float = 0.999

    def __post_init__(self):
        if self.patience < 0 or self.max_steps < 0:
            raise ConfigError("patience and max_steps must be >= 0")
        if self.val_size < 1 or self.eval_every < 1 or self.batch_size < 1:
            raise ConfigError("val_size, eval_every and batch_size must be >= 1")


def keep_training(
    gan: TrainedGAN,
    mixture: MixtureSpec,
    config: KeepTrainingConfig,
    seed: int,
    fake_sampler=None,
) -> NetworkParams:
    """Refine the discriminator with the generator frozen.

    Trains on fresh real-vs-generated batches and early-stops on a held-out
    validation set: stop after `patience` consecutive evaluations without
    improvement, return the best-validation checkpoint. `fake_sampler(rng, n)`
    overrides the generator as the source of fake samples (the generator is
    the default).
    """
    if config.patience == 0:
        return gan.discriminator.copy()
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    prior = PriorSpec(dim=gan.generator.input_dim)
    if fake_sampler is None:
        def fake_sampler(r, n):
            return forward(gan.generator, prior_sample(r, n, prior)).output

    d_loss_fn = _d_loss_fn(gan.loss_kind)
    val_real = mixture_sample(mixture, rng, config.val_size)
    val_fake = fake_sampler(rng, config.val_size)

    def val_loss(d):
        r = forward(d, val_real).output[:, 0]
        f = forward(d, val_fake).output[:, 0]
        return d_loss_fn(r, f)[0]

    disc = gan.discriminator.copy()
    state = init_adam(disc, AdamHyper(config.learning_rate, config.beta1, config.beta2))
    best_loss = val_loss(disc)
    best = disc.copy()
    stale = 0
    n = config.batch_size
    for step in range(1, config.max_steps + 1):
        real = mixture_sample(mixture, rng, n)
        fake = fake_sampler(rng, n)
        tape = forward(disc, np.concatenate([real, fake]))
        logits = tape.output[:, 0]
        _, grad_r, grad_f = d_loss_fn(logits[:n], logits[n:])
        grads, _ = backward(disc, tape, np.concatenate([grad_r, grad_f])[:, None])
        disc, state = adam_step(disc, grads, state)
        if step % config.eval_every == 0:
            loss = val_loss(disc)
            if loss < best_loss:
                best_loss = loss
                best = disc.copy()
                stale = 0
            else:
                stale += 1
                if stale >= config.patience:
                    break
    return best


@dataclass
class CalibratedCritic:
    """A frozen base discriminator with a scalar affine head on its logit."""

    base: NetworkParams
    weight: float
    bias: float
    kind: str  # "direct" or "calibrated"

    def logits(self, points) -> np.ndarray:
        base = forward(self.base, np.asarray(points, dtype=np.float64)).output[:, 0]
        return self.weight * base + self.bias

    __call__ = logits


def direct_critic(discriminator: NetworkParams) -> CalibratedCritic:
    """Identity head: the raw discriminator logit."""
    return CalibratedCritic(base=discriminator, weight=1.0, bias=0.0, kind="direct")


@dataclass(frozen=True)
class CalibrationConfig:
    max_iter: int = 500
    l2: float = 1e-6  # keeps the optimum finite when the classes separate


def fit_calibration_layer(
    base_d: NetworkParams,
    real_batch,
    fake_batch,
    config: CalibrationConfig = CalibrationConfig(),
) -> CalibratedCritic:
    """Fit a*logit+b by logistic regression (real=1, fake=0) on frozen base logits."""
    real_batch = np.asarray(real_batch, dtype=np.float64)
    fake_batch = np.asarray(fake_batch, dtype=np.float64)
    if real_batch.size == 0 or fake_batch.size == 0:
        raise ConfigError("calibration needs non-empty real and fake batches")
    t_real = forward(base_d, real_batch).output[:, 0]
    t_fake = forward(base_d, fake_batch).output[:, 0]
    n_total = t_real.size + t_fake.size

    def objective(ab):
        a, b = ab
        u_r = a * t_real + b
        u_f = a * t_fake + b
        loss = (softplus(-u_r).sum() + softplus(u_f).sum()) / n_total
        loss += 0.5 * config.l2 * (a * a + b * b)
        du_r = -sigmoid(-u_r) / n_total
        du_f = sigmoid(u_f) / n_total
        da = (du_r * t_real).sum() + (du_f * t_fake).sum() + config.l2 * a
        db = du_r.sum() + du_f.sum() + config.l2 * b
        return loss, np.array([da, db])

    res = minimize(
        objective,
        x0=np.array([1.0, 0.0]),
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": config.max_iter},
    )
    a, b = (float(v) for v in res.x)
    if not (np.isfinite(a) and np.isfinite(b)):
        raise NumericError("calibration head diverged")
    return CalibratedCritic(base=base_d, weight=a, bias=b, kind="calibrated")


def generator_sampler(gen: NetworkParams, prior: PriorSpec | None = None):
    """Callable (rng, n) -> (points, latents) drawing through the generator."""
    if prior is None:
        prior = PriorSpec(dim=gen.input_dim)

    def draw(rng, n):
        z = prior_sample(rng, n, prior)
        return forward(gen, z).output, z

    return draw


def network_critic(discriminator: NetworkParams):
    """Callable points -> logit vector for a logit-output discriminator."""

    def logits(points):
        return forward(discriminator, np.asarray(points, dtype=np.float64)).output[:, 0]

    return logits


def history_to_csv(history, path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["step", "d_loss", "g_loss"])
        for step, d_loss, g_loss in history:
            writer.writerow([step, repr(float(d_loss)), repr(float(g_loss))])
