"""Grid-of-Gaussians target distribution, the latent prior, and the analytic
log-density-ratio oracle.

Densities are computed in log space and exponentiated at the boundary; with
component std 0.05 the linear-space terms underflow almost immediately.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import ConfigError, NumericError, SupportError


@dataclass
class MixtureSpec:
    """Isotropic Gaussian mixture: centers (k, d), shared std, weight vector."""

    centers: np.ndarray
    sigma: float
    weights: np.ndarray

    def __post_init__(self):
        self.centers = np.atleast_2d(np.asarray(self.centers, dtype=np.float64))
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.sigma = float(self.sigma)
        if self.sigma <= 0:
            raise ConfigError("sigma must be positive")
        k = self.centers.shape[0]
        if self.weights.shape != (k,):
            raise ConfigError("weights length must match number of centers")
        if np.any(self.weights < 0) or abs(self.weights.sum() - 1.0) > 1e-12:
            raise ConfigError("weights must be non-negative and sum to 1 within 1e-12")
        if len(np.unique(self.centers, axis=0)) != k:
            raise ConfigError("centers must be distinct")

    @property
    def n_components(self) -> int:
        return self.centers.shape[0]

    @property
    def dim(self) -> int:
        return self.centers.shape[1]


def make_grid_mixture(rows: int, cols: int, spacing: float, sigma: float) -> MixtureSpec:
    """rows*cols equally-weighted components on a regular grid centered at the origin."""
    if rows < 1 or cols < 1:
        raise ConfigError("rows and cols must be >= 1")
    if spacing <= 0 or sigma <= 0:
        raise ConfigError("spacing and sigma must be positive")
    xs = (np.arange(cols) - (cols - 1) / 2.0) * spacing
    ys = (np.arange(rows) - (rows - 1) / 2.0) * spacing
    centers = [(x, y) for y in ys for x in xs]
    k = rows * cols
    return MixtureSpec(centers=np.array(centers), sigma=sigma, weights=np.full(k, 1.0 / k))


def mixture_log_density(spec: MixtureSpec, points):
    """log p(x) for one point (d,) or a batch (n, d)."""
    pts = np.asarray(points, dtype=np.float64)
    scalar = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[1] != spec.dim:
        raise ConfigError(f"points have dim {pts.shape[1]}, mixture has dim {spec.dim}")
    if not np.isfinite(pts).all():
        raise NumericError("non-finite query point")
    var = spec.sigma**2
    sq = ((pts[:, None, :] - spec.centers[None, :, :]) ** 2).sum(axis=2)
    log_norm = -0.5 * spec.dim * np.log(2.0 * np.pi * var)
    log_terms = np.log(spec.weights)[None, :] + log_norm - sq / (2.0 * var)
    out = logsumexp(log_terms, axis=1)
    return float(out[0]) if scalar else out


def mixture_density(spec: MixtureSpec, points):
    """p(x); underflows to 0.0 in the far tails."""
    return np.exp(mixture_log_density(spec, points))


def mixture_sample(spec: MixtureSpec, rng: np.random.Generator, n: int = 1) -> np.ndarray:
    """n exact draws (component by weight, then Gaussian jitter); (n, d)."""
    idx = rng.choice(spec.n_components, size=n, p=spec.weights)
    return spec.centers[idx] + spec.sigma * rng.standard_normal((n, spec.dim))


@dataclass(frozen=True)
class PriorSpec:
    dim: int = 2
    mean: float = 0.0
    std: float = 1.0

    def __post_init__(self):
        if self.std <= 0:
            raise ConfigError("prior std must be positive")


def prior_sample(rng: np.random.Generator, n: int = 1, spec: PriorSpec = PriorSpec()) -> np.ndarray:
    """n latent draws from the isotropic Gaussian prior; (n, dim)."""
    return spec.mean + spec.std * rng.standard_normal((n, spec.dim))


def optimal_logit(p_d_density, p_g_density, point):
    """log(p_d(x) / p_g(x)): the logit of the ideal real-vs-fake classifier.

    Both density callables must be positive at `point`; a vanishing proposal
    density makes the ratio undefined (support mismatch). Accepts a batch if
    the density callables are vectorized.
    """
    pd = np.asarray(p_d_density(point), dtype=np.float64)
    pg = np.asarray(p_g_density(point), dtype=np.float64)
    if not (np.isfinite(pd).all() and np.isfinite(pg).all()):
        raise NumericError("densities must be finite")
    if np.any(pg <= 0.0):
        raise SupportError("proposal density is zero at the query point")
    if np.any(pd <= 0.0):
        raise SupportError("target density is zero at the query point")
    out = np.log(pd) - np.log(pg)
    return float(out) if out.ndim == 0 else out


def mixture_to_jsonable(spec: MixtureSpec) -> dict:
    return {
        "centers": spec.centers.tolist(),
        "sigma": spec.sigma,
        "weights": spec.weights.tolist(),
    }


def mixture_from_jsonable(obj: dict) -> MixtureSpec:
    return MixtureSpec(
        centers=np.asarray(obj["centers"], dtype=np.float64),
        sigma=float(obj["sigma"]),
        weights=np.asarray(obj["weights"], dtype=np.float64),
    )
