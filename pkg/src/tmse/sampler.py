"""Euler ODE sampler driven by a clean-target predictor."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .path import ProbabilityPath, vector_field_from_predictor

Predictor = Callable[[np.ndarray, np.ndarray, float], np.ndarray]


class NumericalError(RuntimeError):
    """Non-finite values appeared during sampling or training."""


@dataclass(frozen=True)
class SamplerConfig:
    n_steps: int = 4
    t_start: float = 0.97
    t_floor: float = 0.03
    record_trajectory: bool = False
    seed: int = 0  # unused by Euler, kept for stochastic samplers

    def __post_init__(self):
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        if not 0.0 <= self.t_floor < self.t_start <= 1.0:
            raise ValueError("need 0 <= t_floor < t_start <= 1")

    @property
    def dt(self) -> float:
        return (self.t_start - self.t_floor) / self.n_steps

    def times(self) -> np.ndarray:
        return self.t_start - np.arange(self.n_steps + 1) * self.dt


@dataclass
class Trajectory:
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    estimates: list = field(default_factory=list)

    def append(self, t: float, x: np.ndarray):
        self.times.append(float(t))
        self.states.append(np.array(x, copy=True))

    def to_csv(self, path, reference: np.ndarray | None = None) -> None:
        with open(path, "w") as fh:
            fh.write("step,t,state_l2" + (",dist_to_ref" if reference is not None else "") + "\n")
            for n, (t, x) in enumerate(zip(self.times, self.states)):
                row = f"{n},{t:.10g},{np.linalg.norm(x):.10g}"
                if reference is not None:
                    row += f",{np.linalg.norm(x - reference):.10g}"
                fh.write(row + "\n")


def _as_callable(predictor) -> Predictor:
    return predictor.predict if hasattr(predictor, "predict") else predictor


def euler_step(path: ProbabilityPath, predictor, x_t, x1, t: float, dt: float):
    """One step ``x_{t-dt} = x_t + dt * u`` with the predictor-conditioned reverse field.

    Returns ``(x_next, x0_hat)``.
    """
    x0_hat = np.asarray(_as_callable(predictor)(x_t, x1, t))
    if dt == 0.0:
        return np.array(x_t, copy=True), x0_hat
    u = vector_field_from_predictor(path, t, x_t, x1, x0_hat)
    return x_t + dt * u, x0_hat


def euler_solve(path: ProbabilityPath, predictor, x1, cfg: SamplerConfig = SamplerConfig()):
    """Integrate from ``x1`` at ``t_start`` down to ``t_floor`` in ``n_steps`` uniform steps.

    Returns ``(x0_hat, trajectory)``: the predictor's estimate from the last
    step, and the ODE states (``None`` unless ``cfg.record_trajectory``).
    """
    x1 = np.asarray(x1, dtype=np.float64)
    if not np.all(np.isfinite(x1)):
        raise NumericalError("non-finite values in the sampler input")
    traj = Trajectory() if cfg.record_trajectory else None
    times = cfg.times()
    x = x1.copy()
    if traj is not None:
        traj.append(times[0], x)
    x0_hat = x
    for n in range(cfg.n_steps):
        x, x0_hat = euler_step(path, predictor, x, x1, times[n], cfg.dt)
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(x0_hat))):
            raise NumericalError(f"non-finite state at sampler step {n} (t={times[n]:.4f})")
        if traj is not None:
            traj.append(times[n + 1], x)
            traj.estimates.append(np.array(x0_hat, copy=True))
    return x0_hat, traj


def final_state(path: ProbabilityPath, predictor, x1, cfg: SamplerConfig) -> np.ndarray:
    """Raw ODE state at ``t_floor`` (as opposed to the predictor's estimate)."""
    cfg = SamplerConfig(cfg.n_steps, cfg.t_start, cfg.t_floor, True, cfg.seed)
    _, traj = euler_solve(path, predictor, x1, cfg)
    return traj.states[-1]
