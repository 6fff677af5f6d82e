"""Gaussian probability path: perturbation sampling and the three vector-field forms."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .schedules import DomainError, MeanSchedule, VarianceSchedule

_DEGENERATE_TOL = 1e-12


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Independent, reproducible generator for ``(seed, stream)``.

    Streams are derived through ``SeedSequence`` spawn keys, so workers with
    different stream ids never share draws.
    """
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(stream),)))


@dataclass(frozen=True)
class ProbabilityPath:
    """``p(x_t) = N(mean(t, x0, x1), std(t)^2)``.

    ``t_eps`` and ``t_max`` bound the times at which perturbed samples are drawn.
    """

    mean: MeanSchedule = field(default_factory=MeanSchedule)
    variance: VarianceSchedule = field(default_factory=VarianceSchedule)
    t_eps: float = 0.03
    t_max: float = 0.97

    def __post_init__(self):
        if not 0.0 <= self.t_eps < self.t_max <= 1.0:
            raise ValueError("need 0 <= t_eps < t_max <= 1")

    def clamp(self, t: float) -> float:
        return float(min(max(t, self.t_eps), self.t_max))

    def mu(self, t, x0, x1):
        return self.mean.mean(t, x0, x1)

    def dmu(self, t, x0, x1):
        return self.mean.derivative(t, x0, x1)

    def sigma(self, t):
        return self.variance.std(t)

    def dsigma(self, t):
        return self.variance.derivative(t)


@dataclass
class PerturbedSample:
    x_t: np.ndarray
    z: np.ndarray
    t: float


def sample_perturbed(path: ProbabilityPath, t: float, x0, x1, rng: np.random.Generator) -> PerturbedSample:
    """Draw ``x_t = mu_t + sigma_t z`` with ``z ~ N(0, I)``; ``t`` is clamped to the path's range."""
    x0 = np.asarray(x0, dtype=np.float64)
    x1 = np.asarray(x1, dtype=np.float64)
    if x0.shape != x1.shape:
        raise ValueError(f"shape mismatch: x0 {x0.shape} vs x1 {x1.shape}")
    t = path.clamp(t)
    z = rng.standard_normal(x0.shape)
    x_t = path.mu(t, x0, x1) + path.sigma(t) * z
    return PerturbedSample(x_t, z, t)


def vector_field_exact(path: ProbabilityPath, t: float, x_t, x0, x1):
    """Conditional field ``(sigma'/sigma)(x_t - mu_t) + mu'_t``."""
    sigma = float(path.sigma(t))
    if sigma <= 0.0:
        raise DomainError(f"sigma_t = 0 at t={t}; the conditional field is undefined")
    return path.dsigma(t) / sigma * (x_t - path.mu(t, x0, x1)) + path.dmu(t, x0, x1)


def vector_field_decomposed(path: ProbabilityPath, t: float, z, x0, x1):
    """Flow-matching regression target ``sigma'_t z + mu'_t``."""
    return path.dsigma(t) * np.asarray(z) + path.dmu(t, x0, x1)


def vector_field_from_predictor(path: ProbabilityPath, t: float, x_t, x1, x0_hat):
    """Reverse-time field rebuilt from a clean-target estimate.

    This is the conditional field with ``x0`` replaced by ``x0_hat``, negated so
    that an Euler step ``x + dt * u`` moves backwards in time. When ``sigma_t``
    vanishes the first term is taken as zero provided ``x_t`` sits on the mean.
    """
    mu = path.mu(t, x0_hat, x1)
    sigma = float(path.sigma(t))
    if sigma > _DEGENERATE_TOL:
        drift = path.dsigma(t) / sigma * (x_t - mu)
    elif np.max(np.abs(x_t - mu), initial=0.0) <= _DEGENERATE_TOL:
        drift = 0.0
    else:
        raise DomainError(f"sigma_t = 0 at t={t} but x_t is off the mean trajectory")
    return -(drift + path.dmu(t, x0_hat, x1))
