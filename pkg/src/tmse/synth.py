"""Deterministic paired (clean, noisy) datasets built from harmonic tones and noise."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dsp import Waveform, save_wav
from .path import make_rng

CLEAN_PEAK = 0.3


@dataclass(frozen=True)
class SynthSpec:
    n_utts: int = 64
    duration_s: float = 2.0
    sample_rate: int = 16000
    noise: str = "white"
    snr_db: tuple = (0.0, 10.0)
    f0_range: tuple = (100.0, 300.0)
    max_harmonics: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.n_utts < 1 or self.duration_s <= 0 or self.sample_rate <= 0:
            raise ValueError("n_utts, duration_s and sample_rate must be positive")
        if self.noise not in ("white", "pink"):
            raise ValueError(f"unknown noise model {self.noise!r}")
        lo, hi = self.snr_db
        if lo > hi or math.isnan(lo) or math.isnan(hi):
            raise ValueError(f"bad SNR range {self.snr_db}")
        if not 2 <= self.max_harmonics:
            raise ValueError("max_harmonics must be at least 2")

    @property
    def n_samples(self) -> int:
        return int(round(self.duration_s * self.sample_rate))


@dataclass
class SynthPair:
    name: str
    clean: Waveform
    noisy: Waveform
    noise: np.ndarray  # exactly noisy - clean
    snr_db: float


def harmonic_tone(rng: np.random.Generator, n: int, fs: int, f0_range=(100.0, 300.0), max_harmonics: int = 5):
    """Sum of 2..max_harmonics harmonics of a random f0 under a slow AM envelope."""
    t = np.arange(n) / fs
    f0 = rng.uniform(*f0_range)
    n_harm = int(rng.integers(2, max_harmonics + 1))
    x = np.zeros(n)
    for h in range(1, n_harm + 1):
        if h * f0 >= fs / 2:
            break
        amp = rng.uniform(0.5, 1.0) / h
        x += amp * np.sin(2 * np.pi * h * f0 * t + rng.uniform(0, 2 * np.pi))
    rate = rng.uniform(1.0, 4.0)
    env = 0.6 + 0.4 * np.sin(2 * np.pi * rate * t + rng.uniform(0, 2 * np.pi))
    x *= env
    return CLEAN_PEAK * x / np.max(np.abs(x))


def pink_noise(rng: np.random.Generator, n: int) -> np.ndarray:
    """White noise shaped to a -3 dB/octave power slope in the frequency domain."""
    spec = np.fft.rfft(rng.standard_normal(n))
    f = np.arange(spec.size, dtype=np.float64)
    shape = np.zeros_like(f)
    shape[1:] = 1.0 / np.sqrt(f[1:])
    return np.fft.irfft(spec * shape, n)


def mix_at_snr(clean: np.ndarray, noise: np.ndarray, snr_db: float) -> np.ndarray:
    """``clean + g * noise`` with ``g`` set so the clean/noise energy ratio is ``snr_db``.

    ``snr_db = +inf`` means no noise at all.
    """
    if snr_db == math.inf:
        return clean.copy()
    e_clean = float(np.dot(clean, clean))
    e_noise = float(np.dot(noise, noise))
    if e_noise == 0.0:
        raise ValueError("noise has zero energy")
    gain = math.sqrt(e_clean / (e_noise * 10.0 ** (snr_db / 10.0)))
    return clean + gain * noise


def generate(spec: SynthSpec = SynthSpec()) -> list[SynthPair]:
    """Utterance ``i`` depends only on ``(spec, i)``; see :class:`SynthSpec`."""
    n, fs = spec.n_samples, spec.sample_rate
    lo, hi = spec.snr_db
    pairs = []
    for i in range(spec.n_utts):
        rng = make_rng(spec.seed, stream=1000 + i)
        clean = harmonic_tone(rng, n, fs, spec.f0_range, spec.max_harmonics)
        snr = lo if lo == hi else float(rng.uniform(lo, hi))
        raw = rng.standard_normal(n) if spec.noise == "white" else pink_noise(rng, n)
        noisy = mix_at_snr(clean, raw, snr)
        pairs.append(SynthPair(f"utt{i:04d}", Waveform(clean, fs), Waveform(noisy, fs), noisy - clean, snr))
    return pairs


def dump_pairs(pairs: list[SynthPair], out_dir, encoding: str = "float32") -> Path:
    """Write ``clean/<name>.wav`` and ``noisy/<name>.wav`` under ``out_dir``."""
    out = Path(out_dir)
    (out / "clean").mkdir(parents=True, exist_ok=True)
    (out / "noisy").mkdir(parents=True, exist_ok=True)
    for p in pairs:
        save_wav(p.clean, out / "clean" / f"{p.name}.wav", encoding=encoding)
        save_wav(p.noisy, out / "noisy" / f"{p.name}.wav", encoding=encoding)
    return out
