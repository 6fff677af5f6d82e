"""Training objectives and evaluation metrics (numpy, no gradients)."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .dsp import StftConfig, Waveform, apply_mel, build_mel_filterbank, stft

SI_SDR_EPS = 1e-8
SI_SDR_CAP_DB = 60.0

MEL_FRAME_SIZES = (32, 64, 128, 256, 512, 1024, 2048)
MEL_BANDS = (5, 10, 20, 40, 80, 160, 210)


def _check_shapes(a, b):
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")


def tm_loss(x0_hat, x0) -> float:
    """Mean squared error against the clean target; complex entries contribute ``|d|^2``."""
    x0_hat, x0 = np.asarray(x0_hat), np.asarray(x0)
    _check_shapes(x0_hat, x0)
    return float(np.mean(np.abs(x0_hat - x0) ** 2))


def fm_loss(u_hat, u_target) -> float:
    """Mean squared error against a vector-field target."""
    return tm_loss(u_hat, u_target)


@dataclass(frozen=True)
class MelLossConfig:
    frame_sizes: tuple = MEL_FRAME_SIZES
    n_mels: tuple = MEL_BANDS

    def __post_init__(self):
        object.__setattr__(self, "frame_sizes", tuple(int(f) for f in self.frame_sizes))
        object.__setattr__(self, "n_mels", tuple(int(m) for m in self.n_mels))
        if not self.frame_sizes or len(self.frame_sizes) != len(self.n_mels):
            raise ValueError("need one Mel band count per frame size")
        for frame, bands in zip(self.frame_sizes, self.n_mels):
            if bands >= frame // 2 + 1:
                raise ValueError(f"{bands} Mel bands do not fit a {frame}-point FFT")

    def scales(self):
        for frame, bands in zip(self.frame_sizes, self.n_mels):
            yield StftConfig(window_len=frame, hop=frame // 4, window="hann"), bands


@lru_cache(maxsize=64)
def mel_filterbank_for(frame: int, n_mels: int, fs: int):
    return build_mel_filterbank(frame // 2 + 1, n_mels, fs, fs / 2.0)


def _samples(w):
    return (w.samples, w.sample_rate) if isinstance(w, Waveform) else (np.asarray(w, float), None)


def multiscale_mel_loss(wav_hat, wav_ref, cfg: MelLossConfig = MelLossConfig(), sample_rate: int | None = None) -> float:
    """Sum over scales of the mean absolute difference of linear-magnitude Mel spectrograms."""
    x_hat, sr_hat = _samples(wav_hat)
    x_ref, sr_ref = _samples(wav_ref)
    if x_hat.shape != x_ref.shape:
        raise ValueError(f"length mismatch: {x_hat.shape} vs {x_ref.shape}")
    if sr_hat is not None and sr_ref is not None and sr_hat != sr_ref:
        raise ValueError("sample rates differ")
    fs = sample_rate or sr_hat or sr_ref or 16000
    total = 0.0
    for scfg, bands in cfg.scales():
        fb = mel_filterbank_for(scfg.fft_len, bands, fs)
        m_hat = apply_mel(np.abs(stft(x_hat, scfg)), fb)
        m_ref = apply_mel(np.abs(stft(x_ref, scfg)), fb)
        total += float(np.mean(np.abs(m_hat - m_ref)))
    return total


def si_sdr(est, ref) -> float:
    """Scale-invariant SDR in dB, capped at +60 dB.

    The reference is scaled to its least-squares fit of ``est``. The residual
    guard is ``eps * |target|^2`` so the value is exactly invariant to
    rescaling ``est``.
    """
    est, _ = _samples(est)
    ref, _ = _samples(ref)
    _check_shapes(est, ref)
    ref_energy = float(np.dot(ref, ref))
    if ref_energy == 0.0:
        raise ValueError("SI-SDR undefined for an all-zero reference")
    target = np.dot(est, ref) / (ref_energy + SI_SDR_EPS) * ref
    residual = est - target
    t_energy = float(np.dot(target, target))
    r_energy = float(np.dot(residual, residual))
    if t_energy == 0.0:
        return -SI_SDR_CAP_DB
    value = 10.0 * np.log10(t_energy / (r_energy + SI_SDR_EPS * t_energy))
    return float(np.clip(value, -SI_SDR_CAP_DB, SI_SDR_CAP_DB))


def sisdr_loss(est, ref) -> float:
    return -si_sdr(est, ref)


def snr(est, ref) -> float:
    """Plain SNR ``|ref|^2 / |ref - est|^2`` in dB, capped at +60 dB."""
    est, _ = _samples(est)
    ref, _ = _samples(ref)
    _check_shapes(est, ref)
    err = float(np.sum((ref - est) ** 2))
    sig = float(np.sum(ref**2))
    if err <= sig * 10 ** (-SI_SDR_CAP_DB / 10):
        return SI_SDR_CAP_DB
    return float(10.0 * np.log10(sig / err))


@dataclass(frozen=True)
class CompositeWeights:
    lambda_mel: float = 0.1
    lambda_sisnr: float = 0.01

    def __post_init__(self):
        for v in (self.lambda_mel, self.lambda_sisnr):
            if not np.isfinite(v) or v < 0:
                raise ValueError("loss weights must be finite and non-negative")


@dataclass
class LossBreakdown:
    total: float
    tm: float
    mel: float
    sisnr: float
    weights: CompositeWeights = field(repr=False, default_factory=CompositeWeights)


def composite_loss(x0_hat_spec, x0_spec, wav_hat, wav_ref, w: CompositeWeights = CompositeWeights(),
                   melcfg: MelLossConfig = MelLossConfig()) -> LossBreakdown:
    """``L_tm + lambda_mel * L_mel + lambda_sisnr * (-SI-SDR)`` with the individual terms."""
    l_tm = tm_loss(x0_hat_spec, x0_spec)
    l_mel = multiscale_mel_loss(wav_hat, wav_ref, melcfg)
    l_si = sisdr_loss(wav_hat, wav_ref)
    total = l_tm + w.lambda_mel * l_mel + w.lambda_sisnr * l_si
    return LossBreakdown(total, l_tm, l_mel, l_si, w)
