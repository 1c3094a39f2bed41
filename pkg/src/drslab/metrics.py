"""Sample-quality evaluation for grid-mixture benchmarks.

Nearest-center mode assignment, recovered-mode counts, high-quality fractions,
residual spread, radial coverage tables, acceptance-rate sweeps, and the plot
data emitters (scatter, interpolation traces, histograms).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, ContractError
from .mixtures import MixtureSpec, mixture_sample
from .numerics import sigmoid
from .rejection import DRSConfig, SampleLog, drs_sample, f_hat

HQ_SIGMA_MULTIPLE = 4.0


@dataclass
class ModeAssignments:
    """Nearest-center assignment for each sample, columnar."""

    mode_index: np.ndarray  # (n,) int
    distance: np.ndarray  # (n,) Euclidean distance to the assigned center
    high_quality: np.ndarray  # (n,) bool, distance <= 4 sigma

    def __len__(self) -> int:
        return self.mode_index.size


def assign_modes(samples, spec: MixtureSpec) -> ModeAssignments:
    """Assign each sample to its nearest center; ties go to the lowest index."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 2 or samples.shape[0] == 0:
        raise ContractError("assign_modes needs a non-empty (n, dim) sample array")
    diffs = samples[:, None, :] - spec.centers[None, :, :]
    dists = np.sqrt((diffs * diffs).sum(axis=2))
    idx = np.argmin(dists, axis=1)  # argmin takes the lowest index on ties
    nearest = dists[np.arange(samples.shape[0]), idx]
    return ModeAssignments(
        mode_index=idx,
        distance=nearest,
        high_quality=nearest <= HQ_SIGMA_MULTIPLE * spec.sigma,
    )


def recovered_modes(assignments: ModeAssignments) -> int:
    """Number of distinct centers that received at least one high-quality sample."""
    return int(np.unique(assignments.mode_index[assignments.high_quality]).size)


def hq_fraction(assignments: ModeAssignments) -> float:
    return float(assignments.high_quality.mean())


def hq_residual_std(samples, assignments: ModeAssignments, spec: MixtureSpec) -> float:
    """Pooled per-coordinate std of (sample - assigned center) over high-quality samples.

    Matches the component sigma on ground-truth draws. NaN when no sample
    qualifies.
    """
    samples = np.asarray(samples, dtype=np.float64)
    hq = assignments.high_quality
    if not hq.any():
        return float("nan")
    residuals = samples[hq] - spec.centers[assignments.mode_index[hq]]
    return float(np.std(residuals))


def within_k_std_table(samples, spec: MixtureSpec, assignments: ModeAssignments | None = None):
    """Percent of samples within k component-sigmas of their assigned center, k=1..4."""
    if assignments is None:
        assignments = assign_modes(samples, spec)
    return tuple(
        float(100.0 * (assignments.distance <= k * spec.sigma).mean()) for k in (1, 2, 3, 4)
    )


@dataclass
class EvalReport:
    recovered_modes: int
    hq_fraction: float
    hq_residual_std: float
    within_k_std: tuple
    n_samples: int

    def to_jsonable(self) -> dict:
        return {
            "recovered_modes": self.recovered_modes,
            "hq_fraction": self.hq_fraction,
            "hq_residual_std": self.hq_residual_std,
            "within_k_std": list(self.within_k_std),
            "n_samples": self.n_samples,
        }


def evaluate_samples(samples, spec: MixtureSpec) -> EvalReport:
    samples = np.asarray(samples, dtype=np.float64)
    assignments = assign_modes(samples, spec)
    return EvalReport(
        recovered_modes=recovered_modes(assignments),
        hq_fraction=hq_fraction(assignments),
        hq_residual_std=hq_residual_std(samples, assignments, spec),
        within_k_std=within_k_std_table(samples, spec, assignments),
        n_samples=samples.shape[0],
    )


def ground_truth_report(spec: MixtureSpec, n: int, rng) -> EvalReport:
    return evaluate_samples(mixture_sample(spec, rng, n), spec)


@dataclass
class SweepPoint:
    percentile: float
    acceptance_rate: float
    hq_fraction: float
    recovered_modes: int
    n_accepted: int


def acceptance_rate_sweep(
    sampler,
    critic,
    mixture: MixtureSpec,
    percentiles,
    config: DRSConfig,
    rng,
) -> list:
    """Run the sampler once per gamma percentile on independent rng substreams."""
    percentiles = list(percentiles)
    if not percentiles:
        raise ConfigError("sweep needs at least one percentile")
    points = []
    for p, sub_rng in zip(percentiles, rng.spawn(len(percentiles))):
        cfg = replace(config, gamma_mode="percentile", gamma_value=float(p))
        result = drs_sample(sampler, critic, cfg, sub_rng)
        report = evaluate_samples(result.accepted_points, mixture)
        points.append(
            SweepPoint(
                percentile=float(p),
                acceptance_rate=result.acceptance_rate,
                hq_fraction=report.hq_fraction,
                recovered_modes=report.recovered_modes,
                n_accepted=len(result.accepted_indices),
            )
        )
    return points


def acceptance_vs_quality_scatter(log: SampleLog, spec: MixtureSpec) -> np.ndarray:
    """(n, 2) array of (acceptance_prob, distance to assigned center), one row per draw."""
    if len(log) == 0:
        return np.empty((0, 2))
    assignments = assign_modes(log.points, spec)
    return np.column_stack([log.acceptance_probs, assignments.distance])


@dataclass
class InterpolationTrace:
    alphas: np.ndarray
    latents: np.ndarray
    points: np.ndarray
    logits: np.ndarray
    acceptance_probs: np.ndarray


def interpolation_trace(
    gen_points,
    critic,
    z1,
    z2,
    alphas=None,
    max_logit: float | None = None,
    epsilon: float = 1e-6,
    gamma: float = 0.0,
) -> InterpolationTrace:
    """Evaluate generator output and acceptance along z = alpha*z1 + (1-alpha)*z2.

    alpha=1 lands exactly on gen(z1), alpha=0 on gen(z2); default grid is
    0, 0.1, ..., 1. Without an explicit `max_logit` the trace's own maximum
    anchors the acceptance probabilities.
    """
    if alphas is None:
        alphas = np.linspace(0.0, 1.0, 11)
    alphas = np.asarray(alphas, dtype=np.float64)
    z1 = np.asarray(z1, dtype=np.float64)
    z2 = np.asarray(z2, dtype=np.float64)
    latents = alphas[:, None] * z1[None, :] + (1.0 - alphas)[:, None] * z2[None, :]
    points = np.asarray(gen_points(latents), dtype=np.float64)
    logits = np.asarray(critic(points), dtype=np.float64)
    if max_logit is None:
        max_logit = float(np.max(logits))
    f = f_hat(logits, max_logit, epsilon, gamma)
    return InterpolationTrace(
        alphas=alphas,
        latents=latents,
        points=points,
        logits=logits,
        acceptance_probs=sigmoid(f),
    )


@dataclass
class HistogramResult:
    bin_edges: np.ndarray
    counts: np.ndarray  # in-range counts; len(bin_edges) - 1
    underflow: int
    overflow: int

    @property
    def total(self) -> int:
        return int(self.counts.sum()) + self.underflow + self.overflow


def histogram(values, bin_edges) -> HistogramResult:
    """Fixed-edge histogram with explicit out-of-range tallies.

    counts.sum() + underflow + overflow always equals len(values).
    """
    values = np.asarray(values, dtype=np.float64)
    bin_edges = np.asarray(bin_edges, dtype=np.float64)
    if bin_edges.size < 2 or np.any(np.diff(bin_edges) <= 0):
        raise ConfigError("bin_edges must be strictly increasing with >= 2 entries")
    counts, _ = np.histogram(values, bins=bin_edges)
    return HistogramResult(
        bin_edges=bin_edges,
        counts=counts,
        underflow=int((values < bin_edges[0]).sum()),
        overflow=int((values > bin_edges[-1]).sum()),
    )
