"""Numeric studies behind the command-line tools; each returns plain rows for CSV output."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .path import ProbabilityPath, make_rng
from .predictor import OraclePredictor
from .sampler import SamplerConfig, final_state
from .schedules import MeanSchedule, VarianceSchedule, snr_trajectory

CONVERGENCE_STEPS = (4, 8, 16, 32, 64)
DEMO_TIMES = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
MEAN_KINDS = ("linear", "ouve", "logistic")


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def read_csv(path) -> tuple[list, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(v) for v in r] for r in rows[1:]])


def schedule_curves(gamma=1.5, k=10.0, x0=0.2, x1=1.0, snr_sigma=0.0, n_points=200):
    """Mean trajectories and SNR curves of the three mean schedules on ``[0.005, 0.995]``.

    ``snr_sigma`` adds a bridge Gaussian term to the SNR noise power; with the
    default of 0 the SNR reflects the mean mismatch alone.
    """
    grid = np.linspace(0.005, 0.995, n_points)
    var = VarianceSchedule("bridge", snr_sigma)
    mus, snrs = [], []
    for kind in MEAN_KINDS:
        m = MeanSchedule(kind, gamma, k)
        mus.append(m.mean(grid, x0, x1))
        snrs.append(snr_trajectory(m, var, x0, x1, grid).snr_db)
    header = ["t"] + [f"mu_{k}" for k in MEAN_KINDS] + [f"snr_{k}" for k in MEAN_KINDS]
    return header, np.column_stack([grid, *mus, *snrs])


def objective_variance(path: ProbabilityPath, n_samples=100_000, n_t=10, x0=0.2, x1=1.0, seed=0):
    """Monte-Carlo variance of the FM regression target against ``sigma'_t^2``.

    The TM target is ``x0`` itself and carries no randomness.
    """
    rng = make_rng(seed, stream=21)
    rows = []
    for t in np.linspace(path.t_eps, path.t_max, n_t):
        z = rng.standard_normal(n_samples)
        u = path.dsigma(t) * z + path.dmu(t, x0, x1)
        tm = np.full(n_samples, x0)
        # centring on an element keeps the variance of a constant exactly 0
        rows.append((t, float(np.var(u)), float(path.dsigma(t)) ** 2, float(np.var(tm - tm[0]))))
    return ["t", "var_fm_empirical", "var_fm_analytic", "var_tm"], np.array(rows)


def random_pairs(n: int, shape, seed: int = 0):
    """``n`` random ``(x0, x1)`` tensors with ``x1 = x0 + noise``."""
    rng = make_rng(seed, stream=31)
    out = []
    for _ in range(n):
        x0 = rng.standard_normal(shape)
        out.append((x0, x0 + rng.standard_normal(shape)))
    return out


def oracle_convergence(path: ProbabilityPath, pairs, steps=CONVERGENCE_STEPS, t_start=0.97, t_floor=0.03):
    """Mean relative error ``|x_N - x0| / |x0|`` of the raw ODE state under the exact-target predictor."""
    rows = []
    for n in steps:
        cfg = SamplerConfig(n, t_start, t_floor)
        errs = []
        for x0, x1 in pairs:
            x = final_state(path, OraclePredictor(x0), x1, cfg)
            errs.append(np.linalg.norm(x - x0) / np.linalg.norm(x0))
        rows.append((n, float(np.mean(errs))))
    return ["n_steps", "mean_rel_error"], np.array(rows)


def _snr_db(ref, x) -> float:
    err = float(np.sum((x - ref) ** 2))
    return float("inf") if err == 0 else float(10 * np.log10(np.sum(ref**2) / err))


def perturb_demo(x0, x1, variance: VarianceSchedule, out_dir, gamma=1.5, k=10.0, times=DEMO_TIMES, seed=0):
    """Write magnitude grids of ``x_t`` for each mean schedule and time, plus an SNR summary.

    The summary holds the SNR of ``x_t`` against ``x0`` and, separately, of the
    mean ``mu_t`` alone, which isolates the transport from the Gaussian term.

    One noise draw ``z`` is shared by every grid so that only the schedule and
    ``t`` differ between files. Returns the list of grid paths.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    z = make_rng(seed, stream=41).standard_normal(np.shape(x0))
    written, summary = [], []
    for kind in MEAN_KINDS:
        path = ProbabilityPath(MeanSchedule(kind, gamma, k), variance)
        for t in times:
            x_t = path.mu(t, x0, x1) + path.sigma(t) * z
            mag = np.hypot(x_t[0], x_t[1])
            name = out / f"perturb_{kind}_t{t:.1f}.csv"
            np.savetxt(name, mag, delimiter=",", fmt="%.8g")
            written.append(name)
            summary.append((kind, t, _snr_db(x0, x_t), _snr_db(x0, path.mu(t, x0, x1))))
    with open(out / "perturb_snr.csv", "w") as fh:
        fh.write("schedule,t,snr_db,snr_mean_db\n")
        for kind, t, snr, snr_mean in summary:
            fh.write(f"{kind},{t:.1f},{snr!r},{snr_mean!r}\n")
    return written
