"""Rejection sampling on critic logits.

Implements classical accept/reject against an explicit envelope bound, the
sigmoid-based acceptance rule driven by a running maximum logit, burn-in
estimation of that maximum, batch-local gamma selection, and hard-threshold
filtering baselines.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigError,
    ContractError,
    EnvelopeError,
    LowAcceptanceError,
    NumericError,
)
from .numerics import log1mexp, sigmoid

GAMMA_MODES = ("fixed", "percentile")

# largest x with exp(x) finite in float64
_MAX_EXP_ARG = float(np.log(np.finfo(np.float64).max))


def density_ratio(logit):
    """e^logit, the density ratio implied by a sigmoid-optimal critic.

    Saturates at float64 max (with a warning) instead of overflowing; work in
    logit space when ratios this large are in play.
    """
    x = np.asarray(logit, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise NumericError("density_ratio requires finite logits")
    if np.any(x > _MAX_EXP_ARG):
        warnings.warn("density_ratio saturated; logit exceeds exp overflow range", RuntimeWarning)
        x = np.minimum(x, _MAX_EXP_ARG)
    out = np.exp(x)
    return float(out) if np.isscalar(logit) else out


@dataclass(frozen=True)
class DRSConfig:
    epsilon: float = 1e-6
    gamma_mode: str = "percentile"
    gamma_value: float = 95.0
    burn_in_count: int = 10_000
    target_count: int = 10_000
    batch_size: int = 1_000
    min_acceptance_rate: float = 1e-4  # 0 disables the floor abort
    rate_window: int = 100_000

    def __post_init__(self):
        if self.epsilon <= 0.0:
            raise ConfigError("epsilon must be > 0")
        if self.gamma_mode not in GAMMA_MODES:
            raise ConfigError(f"gamma_mode must be one of {GAMMA_MODES}")
        if self.gamma_mode == "percentile" and not 0.0 <= self.gamma_value <= 100.0:
            raise ConfigError("percentile gamma_value must be in [0, 100]")
        if min(self.burn_in_count, self.target_count, self.batch_size, self.rate_window) < 1:
            raise ConfigError("counts, batch_size and rate_window must be >= 1")
        if self.min_acceptance_rate < 0.0:
            raise ConfigError("min_acceptance_rate must be >= 0")


@dataclass
class MaxEstimate:
    """Running maximum of critic logits; never decreases within a run."""

    max_logit: float
    update_count: int = 0

    def observe(self, logits) -> bool:
        batch_max = float(np.max(logits))
        if batch_max > self.max_logit:
            self.max_logit = batch_max
            self.update_count += 1
            return True
        return False


@dataclass(frozen=True)
class SampleRecord:
    point: np.ndarray
    latent: np.ndarray | None
    logit: float
    f_value: float
    acceptance_prob: float
    psi: float
    accepted: bool
    batch_index: int
    gamma: float


CSV_HEADER = (
    "x", "y", "z1", "z2", "logit", "f_value",
    "acceptance_prob", "psi", "accepted", "batch_index", "gamma_used",
)


@dataclass
class SampleLog:
    """Columnar log of every proposal a sampling run made, in draw order."""

    points: np.ndarray
    latents: np.ndarray | None
    logits: np.ndarray
    f_values: np.ndarray
    acceptance_probs: np.ndarray
    psis: np.ndarray
    accepted: np.ndarray
    batch_indices: np.ndarray
    gammas: np.ndarray

    def __len__(self) -> int:
        return self.logits.size

    def subset(self, mask) -> "SampleLog":
        mask = np.asarray(mask)
        return SampleLog(
            points=self.points[mask],
            latents=None if self.latents is None else self.latents[mask],
            logits=self.logits[mask],
            f_values=self.f_values[mask],
            acceptance_probs=self.acceptance_probs[mask],
            psis=self.psis[mask],
            accepted=self.accepted[mask],
            batch_indices=self.batch_indices[mask],
            gammas=self.gammas[mask],
        )

    def to_records(self) -> list:
        latents = [None] * len(self) if self.latents is None else self.latents
        return [
            SampleRecord(
                point=self.points[i],
                latent=latents[i],
                logit=float(self.logits[i]),
                f_value=float(self.f_values[i]),
                acceptance_prob=float(self.acceptance_probs[i]),
                psi=float(self.psis[i]),
                accepted=bool(self.accepted[i]),
                batch_index=int(self.batch_indices[i]),
                gamma=float(self.gammas[i]),
            )
            for i in range(len(self))
        ]

    def to_csv(self, path) -> None:
        if self.points.ndim != 2 or self.points.shape[1] != 2:
            raise ContractError("sample log CSV is defined for 2D points")
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(CSV_HEADER)
            for i in range(len(self)):
                z = ("", "") if self.latents is None else (
                    repr(float(self.latents[i, 0])), repr(float(self.latents[i, 1])))
                writer.writerow([
                    repr(float(self.points[i, 0])),
                    repr(float(self.points[i, 1])),
                    z[0],
                    z[1],
                    repr(float(self.logits[i])),
                    repr(float(self.f_values[i])),
                    repr(float(self.acceptance_probs[i])),
                    repr(float(self.psis[i])),
                    int(self.accepted[i]),
                    int(self.batch_indices[i]),
                    repr(float(self.gammas[i])),
                ])


def _draw(sampler, rng, n):
    out = sampler(rng, n)
    if isinstance(out, tuple):
        points, latents = out
        return np.asarray(points, dtype=np.float64), np.asarray(latents, dtype=np.float64)
    return np.asarray(out, dtype=np.float64), None


def _finite_logits(critic, points):
    logits = np.asarray(critic(points), dtype=np.float64)
    if not np.all(np.isfinite(logits)):
        raise NumericError("critic produced non-finite logits")
    return logits


def burn_in(sampler, critic, count, rng, batch_size: int = 1_000) -> MaxEstimate:
    """Estimate the maximum critic logit from `count` fresh generator draws."""
    if count < 1:
        raise ConfigError("burn-in count must be >= 1")
    best = -np.inf
    remaining = count
    while remaining > 0:
        points, _ = _draw(sampler, rng, min(batch_size, remaining))
        best = max(best, float(np.max(_finite_logits(critic, points))))
        remaining -= min(batch_size, remaining)
    return MaxEstimate(max_logit=best, update_count=0)


def f_hat(logit, max_logit, epsilon, gamma=0.0):
    """Shifted acceptance logit: delta - log(1 - e^(delta - epsilon)) - gamma.

    delta = logit - max_logit must be <= 0; callers raise the running max
    before evaluating a batch. Strictly increasing in `logit`. Broadcasts
    over both arguments.
    """
    if epsilon <= 0.0:
        raise ConfigError("epsilon must be > 0")
    delta = np.asarray(logit, dtype=np.float64) - np.asarray(max_logit, dtype=np.float64)
    if np.any(delta > 0.0):
        raise ContractError(
            f"logit exceeds max_logit by {float(np.max(delta)):.6g}; update the max first"
        )
    out = delta - log1mexp(delta - epsilon) - gamma
    return float(out) if np.isscalar(logit) and np.isscalar(max_logit) else out


def acceptance_prob(f):
    """sigmoid of the acceptance logit, stable for large |f|."""
    return sigmoid(f)


def nearest_rank_percentile(values, p: float) -> float:
    """The ceil(p/100 * n)-th smallest value (rank clamped to >= 1)."""
    if not 0.0 <= p <= 100.0:
        raise ConfigError("percentile must be in [0, 100]")
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ContractError("percentile of an empty batch is undefined")
    rank = max(1, int(np.ceil(p / 100.0 * values.size)))
    return float(np.sort(values)[rank - 1])


def select_gamma(f_values_pre_gamma, config: DRSConfig) -> float:
    """Batch shift: a constant, or the nearest-rank percentile of gamma-free f values."""
    if config.gamma_mode == "fixed":
        return float(config.gamma_value)
    return nearest_rank_percentile(f_values_pre_gamma, config.gamma_value)


@dataclass
class DRSResult:
    log: SampleLog
    max_estimate: MaxEstimate
    n_proposed: int
    n_accepted: int
    accepted_indices: np.ndarray = field(repr=False)

    @property
    def acceptance_rate(self) -> float:
        return self.n_accepted / self.n_proposed

    @property
    def accepted(self) -> SampleLog:
        return self.log.subset(self.accepted_indices)

    @property
    def accepted_points(self) -> np.ndarray:
        return self.log.points[self.accepted_indices]


def drs_sample(
    sampler,
    critic,
    config: DRSConfig,
    rng,
    initial_max_logit: float | None = None,
    max_draws: int | None = None,
) -> DRSResult:
    """Draw until `target_count` proposals pass the sigmoid accept test.

    Per batch: raise the running max with any new batch maximum, evaluate the
    gamma-free acceptance logits against it, pick gamma per the configured
    policy, accept draw i iff psi_i <= sigmoid(f_i - gamma). Every draw is
    logged. `initial_max_logit` replaces the burn-in phase (used when the
    true maximum is known analytically). `max_draws` caps total proposals and
    returns a partial result instead of looping forever.

    Raises LowAcceptanceError when a full `rate_window` of consecutive draws
    accepts below `min_acceptance_rate`.
    """
    if initial_max_logit is None:
        est = burn_in(sampler, critic, config.burn_in_count, rng, config.batch_size)
    else:
        est = MaxEstimate(max_logit=float(initial_max_logit), update_count=0)

    batches = {name: [] for name in
               ("points", "latents", "logits", "f_values", "probs", "psis", "accepted")}
    batch_sizes = []
    have_latents = True
    n_accepted = 0
    n_proposed = 0
    window_draws = 0
    window_accepts = 0
    batch_index = 0
    gamma_used = []
    while n_accepted < config.target_count:
        n = config.batch_size
        if max_draws is not None:
            n = min(n, max_draws - n_proposed)
            if n <= 0:
                break
        points, latents = _draw(sampler, rng, n)
        logits = _finite_logits(critic, points)
        est.observe(logits)
        f_free = f_hat(logits, est.max_logit, config.epsilon, gamma=0.0)
        gamma = select_gamma(f_free, config)
        f = f_free - gamma
        probs = sigmoid(f)
        psis = rng.random(n)
        accepted = psis <= probs

        batches["points"].append(points)
        if latents is None:
            have_latents = False
        else:
            batches["latents"].append(latents)
        batches["logits"].append(logits)
        batches["f_values"].append(f)
        batches["probs"].append(probs)
        batches["psis"].append(psis)
        batches["accepted"].append(accepted)
        batch_sizes.append(n)
        gamma_used.append(gamma)
        batch_index += 1

        n_proposed += n
        n_accepted += int(accepted.sum())
        window_draws += n
        window_accepts += int(accepted.sum())
        if config.min_acceptance_rate > 0.0 and window_draws >= config.rate_window:
            rate = window_accepts / window_draws
            if rate < config.min_acceptance_rate:
                raise LowAcceptanceError(
                    f"acceptance rate {rate:.3g} over the last {window_draws} draws is below "
                    f"the floor {config.min_acceptance_rate:.3g} "
                    f"(max_logit={est.max_logit:.4g}, last gamma={gamma:.4g})"
                )
            window_draws = 0
            window_accepts = 0

    log = SampleLog(
        points=np.concatenate(batches["points"]) if batches["points"] else np.empty((0, 2)),
        latents=np.concatenate(batches["latents"]) if have_latents and batches["latents"] else None,
        logits=np.concatenate(batches["logits"]) if batches["logits"] else np.empty(0),
        f_values=np.concatenate(batches["f_values"]) if batches["f_values"] else np.empty(0),
        acceptance_probs=np.concatenate(batches["probs"]) if batches["probs"] else np.empty(0),
        psis=np.concatenate(batches["psis"]) if batches["psis"] else np.empty(0),
        accepted=np.concatenate(batches["accepted"]) if batches["accepted"] else np.empty(0, bool),
        batch_indices=np.repeat(np.arange(batch_index), batch_sizes)
        if batch_sizes else np.empty(0, int),
        gammas=np.repeat(np.asarray(gamma_used), batch_sizes) if batch_sizes else np.empty(0),
    )
    accepted_indices = np.flatnonzero(log.accepted)[: config.target_count]
    return DRSResult(
        log=log,
        max_estimate=est,
        n_proposed=n_proposed,
        n_accepted=int(log.accepted.sum()),
        accepted_indices=accepted_indices,
    )


@dataclass
class RejectionResult:
    samples: np.ndarray  # truncated to the requested count
    n_proposed: int
    n_accepted: int  # all acceptances, including the final batch's surplus

    @property
    def acceptance_rate(self) -> float:
        return self.n_accepted / self.n_proposed


def exact_rejection_sample(
    proposal_sampler,
    proposal_density,
    target_density,
    bound: float,
    count: int,
    rng,
    batch_size: int = 10_000,
    ratio_tol: float = 1e-9,
) -> RejectionResult:
    """Classical rejection sampling: accept y with probability target(y) / (bound * proposal(y)).

    Accepted draws are exact samples from the target; the long-run acceptance
    rate is 1/bound for normalized densities. A ratio above 1 (beyond float
    rounding `ratio_tol`) means the envelope bound is invalid.
    """
    if bound <= 0.0 or count < 1:
        raise ConfigError("bound must be > 0 and count >= 1")
    kept = []
    n_kept = 0
    n_proposed = 0
    while n_kept < count:
        y = np.asarray(proposal_sampler(rng, batch_size), dtype=np.float64)
        ratio = np.asarray(target_density(y), dtype=np.float64) / (
            bound * np.asarray(proposal_density(y), dtype=np.float64)
        )
        if np.any(ratio > 1.0 + ratio_tol):
            bad = int(np.argmax(ratio))
            raise EnvelopeError(
                f"target/(bound*proposal) = {float(ratio[bad]):.6g} > 1 at {y[bad]!r}; "
                "the envelope bound is too small"
            )
        accepted = rng.random(batch_size) <= np.minimum(ratio, 1.0)
        kept.append(y[accepted])
        n_kept += int(accepted.sum())
        n_proposed += batch_size
    samples = np.concatenate(kept)[:count]
    return RejectionResult(samples=samples, n_proposed=n_proposed, n_accepted=n_kept)


def hard_threshold_filter(logits, threshold: float) -> np.ndarray:
    """Boolean keep-mask: logit >= threshold. The baseline DRS replaces."""
    return np.asarray(logits, dtype=np.float64) >= threshold


def threshold_for_rate(logits, target_rate: float):
    """Threshold whose keep-rate on `logits` is closest to `target_rate`.

    Returns (threshold, achieved_rate). Ties and duplicate logits make some
    rates unachievable; the closest achievable one wins (the higher rate on an
    exact tie).
    """
    if not 0.0 < target_rate <= 1.0:
        raise ConfigError("target_rate must be in (0, 1]")
    logits = np.asarray(logits, dtype=np.float64)
    if logits.size == 0:
        raise ContractError("cannot choose a threshold from an empty logit set")
    candidates = np.unique(logits)  # ascending; rates decrease as threshold rises
    rates = np.array([(logits >= t).mean() for t in candidates])
    best = int(np.argmin(np.abs(rates - target_rate)))
    return float(candidates[best]), float(rates[best])
