"""Target-matching generative speech enhancement on STFT spectrograms.

The package builds Gaussian probability paths between clean and noisy
compressed spectrograms, trains a predictor of the clean target and
integrates the induced ODE with Euler steps to enhance noisy speech.
"""

from .dsp import CompressionParams, StftConfig, Waveform, compress, decompress, istft, load_wav, save_wav, stft
from .enhance import enhance
from .path import ProbabilityPath, sample_perturbed, vector_field_decomposed, vector_field_exact, vector_field_from_predictor
from .sampler import SamplerConfig, euler_solve, euler_step
from .schedules import DomainError, MeanSchedule, VarianceSchedule

__version__ = "0.1.0"

__all__ = [
    "CompressionParams",
    "DomainError",
    "MeanSchedule",
    "ProbabilityPath",
    "SamplerConfig",
    "StftConfig",
    "VarianceSchedule",
    "Waveform",
    "compress",
    "decompress",
    "enhance",
    "euler_solve",
    "euler_step",
    "istft",
    "load_wav",
    "sample_perturbed",
    "save_wav",
    "stft",
    "vector_field_decomposed",
    "vector_field_exact",
    "vector_field_from_predictor",
]
