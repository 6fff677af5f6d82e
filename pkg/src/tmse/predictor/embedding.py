"""Fourier-feature timestep encoder."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import autograd as ag
from ..path import make_rng


@dataclass(frozen=True)
class EmbeddingConfig:
    dim: int = 128
    fourier_scale: float = 16.0
    seed: int = 0

    def __post_init__(self):
        if self.dim <= 0 or self.dim % 2:
            raise ValueError("embedding dim must be a positive even integer")


def fourier_frequencies(cfg: EmbeddingConfig) -> np.ndarray:
    return make_rng(cfg.seed, stream=7).standard_normal(cfg.dim // 2) * cfg.fourier_scale


def fourier_features(t, cfg: EmbeddingConfig) -> np.ndarray:
    """``[sin(2 pi w t), cos(2 pi w t)]`` for fixed random frequencies ``w``; shape ``(*t.shape, dim)``."""
    t = np.asarray(t, dtype=np.float64)
    proj = 2.0 * np.pi * t[..., None] * fourier_frequencies(cfg)
    return np.concatenate([np.sin(proj), np.cos(proj)], axis=-1)


def init_encoder(cfg: EmbeddingConfig, rng: np.random.Generator, prefix: str = "temb") -> dict:
    d = cfg.dim
    return {
        f"{prefix}.w1": rng.standard_normal((d, d)) / np.sqrt(d),
        f"{prefix}.b1": np.zeros(d),
        f"{prefix}.w2": rng.standard_normal((d, d)) / np.sqrt(d),
        f"{prefix}.b2": np.zeros(d),
    }


def encode(params: dict, t, cfg: EmbeddingConfig, prefix: str = "temb") -> ag.Tensor:
    """Fourier features followed by Linear -> SiLU -> Linear; returns ``(B, dim)``."""
    feats = ag.Tensor(fourier_features(np.atleast_1d(t), cfg))
    h = ag.silu(feats @ params[f"{prefix}.w1"] + params[f"{prefix}.b1"])
    return h @ params[f"{prefix}.w2"] + params[f"{prefix}.b2"]


def timestep_embed(t: float, cfg: EmbeddingConfig = EmbeddingConfig(), params: dict | None = None) -> np.ndarray:
    """Embedding vector of length ``cfg.dim`` for a scalar time.

    Without ``params`` the encoder layers are initialised deterministically from ``cfg.seed``.
    """
    if not 0.0 <= float(t) <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    if params is None:
        params = init_encoder(cfg, make_rng(cfg.seed, stream=8))
    tensors = {k: ag.Tensor(v) for k, v in params.items()}
    return encode(tensors, t, cfg).data[0]
