"""Waveform-level enhancement: STFT, compression, ODE sampling and the inverse chain."""

from __future__ import annotations

import numpy as np

from .dsp import CompressionParams, StftConfig, Waveform, compress, decompress, istft, stft
from .path import ProbabilityPath
from .predictor import OraclePredictor
from .sampler import SamplerConfig, euler_solve


def to_feature(samples: np.ndarray, stft_cfg: StftConfig, comp: CompressionParams) -> np.ndarray:
    return compress(stft(samples, stft_cfg), comp)


def to_waveform(feature: np.ndarray, n_samples: int, stft_cfg: StftConfig, comp: CompressionParams) -> np.ndarray:
    return istft(decompress(feature, comp), stft_cfg, n_samples)


def enhance(noisy: Waveform, predictor, path: ProbabilityPath = ProbabilityPath(),
            sampler: SamplerConfig = SamplerConfig(), stft_cfg: StftConfig = StftConfig(),
            comp: CompressionParams = CompressionParams()) -> Waveform:
    """Enhance one utterance; the output has exactly as many samples as the input."""
    x1 = to_feature(noisy.samples, stft_cfg, comp)
    x0_hat, _ = euler_solve(path, predictor, x1, sampler)
    return Waveform(to_waveform(x0_hat, noisy.samples.size, stft_cfg, comp), noisy.sample_rate)


def oracle_for(clean: Waveform, stft_cfg: StftConfig = StftConfig(),
               comp: CompressionParams = CompressionParams()) -> OraclePredictor:
    """Predictor that always answers with the compressed spectrogram of ``clean``."""
    return OraclePredictor(to_feature(clean.samples, stft_cfg, comp))
