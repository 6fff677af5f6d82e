"""Flat ``key = value`` run configuration shared by every command."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

from .dsp import CompressionParams, StftConfig
from .losses import MEL_BANDS, MEL_FRAME_SIZES, CompositeWeights, MelLossConfig
from .path import ProbabilityPath
from .predictor import DbaConfig, ToyConfig, build_predictor
from .sampler import SamplerConfig
from .schedules import MeanSchedule, VarianceSchedule
from .synth import SynthSpec
from .training import TrainConfig


class ConfigError(ValueError):
    pass


_PREDICTOR_CONFIGS = {"toy": ToyConfig, "dba": DbaConfig}


@dataclass
class RunConfig:
    # probability path
    mean_schedule: str = "logistic"
    gamma: float = 1.5
    k: float = 10.0
    variance_schedule: str = "bridge"
    sigma: float = 0.5
    t_eps: float = 0.03
    t_max: float = 0.97
    # sampler
    n_steps: int = 4
    t_start: float = 0.97
    t_floor: float = 0.03
    # features
    window_len: int = 510
    hop: int = 128
    fft_len: int = 510
    window: str = "sqrt_hann"
    alpha: float = 0.5
    beta: float = 0.33
    sample_rate: int = 16000
    # losses and training
    lambda_mel: float = 0.1
    lambda_sisnr: float = 0.01
    mel_frame_sizes: tuple = MEL_FRAME_SIZES
    mel_bands: tuple = MEL_BANDS
    epochs: int = 40
    lr: float = 1e-3
    batch_size: int = 8
    optimizer: str = "sgd"
    predictor: str = "toy"
    # synthetic data
    synth_n_utts: int = 64
    synth_duration_s: float = 2.0
    synth_noise: str = "white"
    synth_snr_low: float = 0.0
    synth_snr_high: float = 10.0
    # analysis commands
    x0: float = 0.2
    x1: float = 1.0
    snr_sigma: float = 0.0
    grid_points: int = 200
    mc_samples: int = 100000
    variance_t_points: int = 10
    convergence_instances: int = 20
    convergence_freq: int = 64
    convergence_frames: int = 64
    wav_encoding: str = "float32"
    seed: int = 0
    # "<predictor>.<field>" overrides, e.g. toy.hidden = 16
    predictor_options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.predictor not in _PREDICTOR_CONFIGS:
            raise ConfigError(f"unknown predictor {self.predictor!r}")
        try:
            self.build_path()
            self.sampler_config()
            self.stft_config()
            self.compression()
            self.mel_config()
            self.predictor_config()
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc

    # builders --------------------------------------------------------------------
    def build_path(self, mean_kind: str | None = None) -> ProbabilityPath:
        return ProbabilityPath(
            MeanSchedule(mean_kind or self.mean_schedule, self.gamma, self.k),
            VarianceSchedule(self.variance_schedule, self.sigma),
            self.t_eps,
            self.t_max,
        )

    def sampler_config(self) -> SamplerConfig:
        return SamplerConfig(self.n_steps, self.t_start, self.t_floor, seed=self.seed)

    def stft_config(self) -> StftConfig:
        return StftConfig(self.window_len, self.hop, self.fft_len, self.window)

    def compression(self) -> CompressionParams:
        return CompressionParams(self.alpha, self.beta)

    def mel_config(self) -> MelLossConfig:
        return MelLossConfig(self.mel_frame_sizes, self.mel_bands)

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs, lr=self.lr, batch_size=self.batch_size, seed=self.seed,
            optimizer=self.optimizer, weights=CompositeWeights(self.lambda_mel, self.lambda_sisnr),
            mel=self.mel_config(), sample_rate=self.sample_rate, stft=self.stft_config(),
            compression=self.compression(),
        )

    def synth_spec(self) -> SynthSpec:
        return SynthSpec(
            n_utts=self.synth_n_utts, duration_s=self.synth_duration_s, sample_rate=self.sample_rate,
            noise=self.synth_noise, snr_db=(self.synth_snr_low, self.synth_snr_high), seed=self.seed,
        )

    def predictor_config(self) -> dict:
        cls = _PREDICTOR_CONFIGS[self.predictor]
        opts = {"n_freq": self.stft_config().n_freq, "seed": self.seed}
        names = {f.name: f for f in fields(cls)}
        for key, raw in self.predictor_options.items():
            kind, _, name = key.partition(".")
            if kind != self.predictor:
                continue
            if name not in names:
                raise ConfigError(f"unknown key {key!r}")
            opts[name] = _coerce(names[name].default, raw, key)
        return dataclasses.asdict(cls(**opts))

    def build_predictor(self):
        return build_predictor(self.predictor, self.predictor_config())

    # text form -------------------------------------------------------------------
    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            if f.name == "predictor_options":
                continue
            lines.append(f"{f.name} = {_format(getattr(self, f.name))}")
        for key, value in sorted(self.predictor_config().items()):
            lines.append(f"{self.predictor}.{key} = {_format(value)}")
        return "\n".join(lines) + "\n"

    def write(self, path) -> None:
        Path(path).write_text(self.to_text())


def _format(value) -> str:
    if isinstance(value, (tuple, list)):
        return ",".join(str(v) for v in value)
    return str(value)


def _coerce(default, raw: str, key: str):
    raw = raw.strip()
    try:
        if isinstance(default, bool):
            if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return raw.lower() in ("true", "1", "yes")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            value = float(raw)
            if math.isnan(value):
                raise ValueError(raw)
            return value
        if isinstance(default, tuple):
            items = [s for s in raw.split(",") if s.strip()]
            kind = type(default[0]) if default else float
            return tuple(kind(s.strip()) for s in items)
    except ValueError:
        raise ConfigError(f"bad value for {key!r}: {raw!r}") from None
    return raw


def parse_config(text: str, overrides: dict | None = None) -> RunConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment, unknown keys are errors."""
    defaults = RunConfig()
    known = {f.name for f in fields(RunConfig)} - {"predictor_options"}
    values, options = {}, {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        if "." in key:
            kind = key.split(".", 1)[0]
            if kind not in _PREDICTOR_CONFIGS:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            options[key] = raw
        elif key in known:
            values[key] = _coerce(getattr(defaults, key), raw, key)
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    cfg = RunConfig(**values, predictor_options=options)
    for key in options:
        kind, _, name = key.partition(".")
        if name not in {f.name for f in fields(_PREDICTOR_CONFIGS[kind])}:
            raise ConfigError(f"unknown key {key!r}")
    return cfg


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    text = "" if path is None else Path(path).read_text()
    return parse_config(text, overrides)
