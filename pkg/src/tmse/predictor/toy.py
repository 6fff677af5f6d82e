"""Desk-scale trainable predictor: a time-conditioned per-frequency mixer.

``x0_hat = a(t) * x_t + b(t) * x1`` where ``a(t)`` and ``b(t)`` are gain
vectors over frequency produced by a two-layer perceptron on Fourier features
of ``t``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .. import autograd as ag
from ..path import make_rng
from .base import TrainablePredictor
from .embedding import EmbeddingConfig, fourier_features


@dataclass(frozen=True)
class ToyConfig:
    n_freq: int = 256
    embed_dim: int = 16
    hidden: int = 8
    fourier_scale: float = 1.0
    init_a: float = 0.0
    init_b: float = 1.0
    init_out_std: float = 0.0
    seed: int = 0


class ToyPredictor(TrainablePredictor):
    kind = "toy"

    def __init__(self, cfg: ToyConfig = ToyConfig(), params: dict | None = None):
        self.cfg = cfg
        self.embedding = EmbeddingConfig(cfg.embed_dim, cfg.fourier_scale, cfg.seed)
        super().__init__(params if params is not None else self._init_params())

    def _init_params(self) -> dict:
        c = self.cfg
        rng = make_rng(c.seed, stream=1)
        return {
            "mlp.w1": rng.standard_normal((c.embed_dim, c.hidden)) / np.sqrt(c.embed_dim),
            "mlp.b1": np.zeros(c.hidden),
            "mlp.w2": rng.standard_normal((c.hidden, 2 * c.n_freq)) * c.init_out_std,
            "mlp.b2": np.concatenate([np.full(c.n_freq, c.init_a), np.full(c.n_freq, c.init_b)]),
        }

    def config_dict(self) -> dict:
        return asdict(self.cfg)

    def gains(self, p: dict, t) -> tuple[ag.Tensor, ag.Tensor]:
        feats = ag.Tensor(fourier_features(np.atleast_1d(t), self.embedding))
        h = ag.tanh(feats @ p["mlp.w1"] + p["mlp.b1"])
        out = h @ p["mlp.w2"] + p["mlp.b2"]
        F = self.cfg.n_freq
        B = out.shape[0]
        return out[:, :F].reshape(B, 1, F, 1), out[:, F:].reshape(B, 1, F, 1)

    def forward(self, p: dict, x_t, x1, t) -> ag.Tensor:
        if x_t.shape[-2] != self.cfg.n_freq:
            raise ValueError(f"toy predictor built for {self.cfg.n_freq} bins, got {x_t.shape[-2]}")
        a, b = self.gains(p, t)
        return a * x_t + b * x1
