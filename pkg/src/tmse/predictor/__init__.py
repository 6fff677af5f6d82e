"""Clean-target predictors ``x_theta(x_t, x1, t) -> x0_hat``."""

from .base import OraclePredictor, TrainablePredictor, load_checkpoint, save_checkpoint
from .dba import DbaConfig, DbaLite, dba_forward
from .embedding import EmbeddingConfig, fourier_features, timestep_embed
from .toy import ToyConfig, ToyPredictor


def build_predictor(kind: str, config: dict, params: dict | None = None) -> TrainablePredictor:
    if kind == "toy":
        return ToyPredictor(ToyConfig(**config), params=params)
    if kind == "dba":
        config = dict(config)
        config["tcn_dilations"] = tuple(config.get("tcn_dilations", (1, 2, 4)))
        return DbaLite(DbaConfig(**config), params=params)
    raise ValueError(f"unknown predictor kind {kind!r}")


def predict(predictor, x_t, x1, t):
    return predictor.predict(x_t, x1, t)


__all__ = [
    "DbaConfig",
    "DbaLite",
    "EmbeddingConfig",
    "OraclePredictor",
    "ToyConfig",
    "ToyPredictor",
    "TrainablePredictor",
    "build_predictor",
    "dba_forward",
    "fourier_features",
    "load_checkpoint",
    "predict",
    "save_checkpoint",
    "timestep_embed",
]
