"""Predictor contract, the oracle test double and parameter checkpoints."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .. import autograd as ag

CHECKPOINT_VERSION = 1


class OraclePredictor:
    """Always returns the bound clean target, whatever the inputs."""

    def __init__(self, x0):
        self.x0 = np.asarray(x0, dtype=np.float64)

    def predict(self, x_t, x1, t):
        if np.shape(x_t) != self.x0.shape:
            raise ValueError(f"shape mismatch: x_t {np.shape(x_t)} vs bound target {self.x0.shape}")
        return self.x0.copy()

    __call__ = predict


class TrainablePredictor:
    """Base class for predictors whose parameters live in ``self.params``.

    Subclasses implement ``forward(tensors, x_t, x1, t)`` on :mod:`autograd`
    tensors with a leading batch axis, and ``config_dict()``.
    """

    kind = "abstract"

    def __init__(self, params: dict):
        self.params = {k: np.asarray(v, dtype=np.float64) for k, v in params.items()}

    def forward(self, tensors: dict, x_t, x1, t) -> ag.Tensor:
        raise NotImplementedError

    def config_dict(self) -> dict:
        raise NotImplementedError

    def tensors(self, trainable: bool = False) -> dict:
        if trainable:
            return {k: ag.parameter(v, name=k) for k, v in self.params.items()}
        return {k: ag.Tensor(v) for k, v in self.params.items()}

    def predict(self, x_t, x1, t):
        """Estimate of ``x0`` with the shape of ``x_t`` (``(2, F, K)`` or batched ``(B, 2, F, K)``)."""
        x_t = np.asarray(x_t, dtype=np.float64)
        x1 = np.asarray(x1, dtype=np.float64)
        if x_t.shape != x1.shape:
            raise ValueError(f"shape mismatch: x_t {x_t.shape} vs x1 {x1.shape}")
        single = x_t.ndim == 3
        if single:
            x_t, x1 = x_t[None], x1[None]
        t = np.broadcast_to(np.asarray(t, dtype=np.float64), (x_t.shape[0],))
        out = self.forward(self.tensors(), ag.Tensor(x_t), ag.Tensor(x1), t).data
        return out[0] if single else out

    __call__ = predict

    def num_parameters(self) -> int:
        return int(sum(v.size for v in self.params.values()))


def save_checkpoint(predictor: TrainablePredictor, path) -> None:
    """Write named parameter arrays plus a JSON header (kind, config, version) to ``.npz``."""
    header = {"version": CHECKPOINT_VERSION, "kind": predictor.kind, "config": predictor.config_dict()}
    arrays = {f"param/{k}": v for k, v in predictor.params.items()}
    with open(path, "wb") as fh:
        np.savez(fh, __header__=np.array(json.dumps(header)), **arrays)


def load_checkpoint(path):
    from . import build_predictor

    path = Path(path)
    with np.load(path, allow_pickle=False) as data:
        header = json.loads(str(data["__header__"]))
        if header.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {header.get('version')}")
        params = {k[len("param/"):]: data[k] for k in data.files if k.startswith("param/")}
    predictor = build_predictor(header["kind"], header["config"])
    missing = set(predictor.params) ^ set(params)
    if missing:
        raise ValueError(f"checkpoint parameters do not match the {header['kind']} config: {sorted(missing)}")
    for k, v in params.items():
        if predictor.params[k].shape != v.shape:
            raise ValueError(f"checkpoint parameter {k} has shape {v.shape}, expected {predictor.params[k].shape}")
    predictor.params = {k: np.asarray(v, dtype=np.float64) for k, v in params.items()}
    return predictor
