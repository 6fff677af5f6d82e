"""Mean and variance schedules of the Gaussian probability path, and their SNR curves.

All mean schedules use the argument order ``mean(t, x0, x1)`` with ``x0`` the
clean value at ``t = 0`` and ``x1`` the noisy value at ``t = 1``. Every function
broadcasts over numpy arrays.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

SNR_CAP_DB = 120.0


class DomainError(ValueError):
    """A schedule quantity is undefined at the requested time."""


class MeanKind(str, enum.Enum):
    LINEAR = "linear"
    OUVE = "ouve"
    LOGISTIC = "logistic"


class VarianceKind(str, enum.Enum):
    LINEAR = "linear"
    BRIDGE = "bridge"
    CONSTANT = "constant"


@dataclass(frozen=True)
class MeanSchedule:
    kind: MeanKind = MeanKind.LOGISTIC
    gamma: float = 1.5
    k: float = 10.0

    def __post_init__(self):
        object.__setattr__(self, "kind", MeanKind(self.kind))
        if self.gamma <= 0 or self.k <= 0:
            raise ValueError("gamma and k must be positive")

    def coefficient(self, t):
        """Mixing weight ``c_t`` with ``mean = x0 + c_t * (x1 - x0)``."""
        t = np.asarray(t, dtype=np.float64)
        if self.kind is MeanKind.LINEAR:
            return t
        if self.kind is MeanKind.OUVE:
            return -np.expm1(-self.gamma * t)
        # logistic: (E - e^{-k(t-1/2)}) / ((E - 1)(1 + e^{-k(t-1/2)})), E = e^{k/2}
        half = 0.5 * self.k
        u = -self.k * (t - 0.5)
        return (np.expm1(half) - np.expm1(u)) / (np.expm1(half) * (1.0 + np.exp(u)))

    def coefficient_derivative(self, t):
        t = np.asarray(t, dtype=np.float64)
        if self.kind is MeanKind.LINEAR:
            return np.ones_like(t)
        if self.kind is MeanKind.OUVE:
            return self.gamma * np.exp(-self.gamma * t)
        half = 0.5 * self.k
        s = 1.0 / (1.0 + np.exp(-self.k * (t - 0.5)))
        return (2.0 + np.expm1(half)) / np.expm1(half) * self.k * s * (1.0 - s)

    def mean(self, t, x0, x1):
        c = self.coefficient(t)
        return x0 + c * (np.asarray(x1) - x0)

    def derivative(self, t, x0, x1):
        return self.coefficient_derivative(t) * (np.asarray(x1) - x0)


@dataclass(frozen=True)
class VarianceSchedule:
    kind: VarianceKind = VarianceKind.BRIDGE
    sigma: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "kind", VarianceKind(self.kind))
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")

    def std(self, t):
        t = np.asarray(t, dtype=np.float64)
        if self.kind is VarianceKind.LINEAR:
            return self.sigma * t
        if self.kind is VarianceKind.BRIDGE:
            return self.sigma * np.sqrt(np.clip(t * (1.0 - t), 0.0, None))
        return np.full_like(t, self.sigma)

    def derivative(self, t):
        t = np.asarray(t, dtype=np.float64)
        if self.kind is VarianceKind.LINEAR:
            return np.full_like(t, self.sigma)
        if self.kind is VarianceKind.BRIDGE:
            if np.any((t <= 0.0) | (t >= 1.0)):
                raise DomainError("bridge std derivative is unbounded at t=0 and t=1; clamp t first")
            return self.sigma * (1.0 - 2.0 * t) / (2.0 * np.sqrt(t * (1.0 - t)))
        return np.zeros_like(t)


def mean_at(spec: MeanSchedule, t, x0, x1):
    return spec.mean(t, x0, x1)


def mean_derivative_at(spec: MeanSchedule, t, x0, x1):
    return spec.derivative(t, x0, x1)


def sigma_at(spec: VarianceSchedule, t):
    return spec.std(t)


def sigma_derivative_at(spec: VarianceSchedule, t):
    return spec.derivative(t)


@dataclass
class SnrCurve:
    grid: np.ndarray
    snr_db: np.ndarray


def snr_trajectory(mean: MeanSchedule, var: VarianceSchedule, x0: float, x1: float, grid) -> SnrCurve:
    """SNR of the perturbed signal with ``x1 = x0 + n``.

    The mean carries ``c_t * n`` of noise and the Gaussian part ``sigma_t``, so
    ``SNR = x0^2 / (c_t^2 n^2 + sigma_t^2)``, capped at +120 dB.
    """
    if x0 == x1:
        raise ValueError("snr_trajectory needs x0 != x1")
    grid = np.asarray(grid, dtype=np.float64)
    n = x1 - x0
    noise = (mean.coefficient(grid) * n) ** 2 + var.std(grid) ** 2
    with np.errstate(divide="ignore"):
        snr = 10.0 * np.log10(x0**2 / np.maximum(noise, 1e-300))
    snr = np.where(noise < 1e-12, SNR_CAP_DB, np.minimum(snr, SNR_CAP_DB))
    return SnrCurve(grid, snr)
