"""Target-matching training loop and its differentiable loss pipeline."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import autograd as ag
from .dsp import CompressionParams, StftConfig, apply_mel, compress, istft, istft_adjoint, stft, stft_adjoint
from .losses import SI_SDR_CAP_DB, SI_SDR_EPS, CompositeWeights, MelLossConfig, mel_filterbank_for
from .path import ProbabilityPath, make_rng, vector_field_decomposed
from .predictor.base import TrainablePredictor
from .sampler import NumericalError

logger = logging.getLogger(__name__)


@dataclass
class SpecPair:
    """One training utterance in both representations."""

    x0: np.ndarray  # compressed clean spectrogram (2, F, K)
    x1: np.ndarray  # compressed noisy spectrogram (2, F, K)
    clean: np.ndarray  # clean waveform
    noisy: np.ndarray


def prepare_pairs(waves, stft_cfg: StftConfig = StftConfig(), comp: CompressionParams = CompressionParams()):
    """``[(clean, noisy), ...]`` waveforms -> list of :class:`SpecPair`."""
    pairs = []
    for clean, noisy in waves:
        c = getattr(clean, "samples", clean)
        n = getattr(noisy, "samples", noisy)
        if c.shape != n.shape:
            raise ValueError("clean and noisy waveforms differ in length")
        pairs.append(SpecPair(compress(stft(c, stft_cfg), comp), compress(stft(n, stft_cfg), comp), c, n))
    return pairs


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 40
    lr: float = 1e-3
    batch_size: int = 8
    seed: int = 0
    optimizer: str = "sgd"
    weights: CompositeWeights = field(default_factory=CompositeWeights)
    mel: MelLossConfig = field(default_factory=MelLossConfig)
    sample_rate: int = 16000
    stft: StftConfig = field(default_factory=StftConfig)
    compression: CompressionParams = field(default_factory=CompressionParams)

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or self.lr <= 0:
            raise ValueError("epochs, batch_size and lr must be positive")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


@dataclass
class EpochLog:
    epoch: int
    tm: float
    mel: float
    sisnr: float
    total: float


@dataclass
class TrainResult:
    params: dict
    log: list

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("epoch,L_tm,L_mel,L_sisnr,total\n")
            for e in self.log:
                fh.write(f"{e.epoch},{float(e.tm)!r},{float(e.mel)!r},{float(e.sisnr)!r},{float(e.total)!r}\n")


# differentiable signal pipeline ---------------------------------------------------


def decompress_tensor(x: ag.Tensor, p: CompressionParams) -> tuple[ag.Tensor, ag.Tensor]:
    """Differentiable inverse compression of ``(B, 2, F, K)``; returns (Re, Im) of the raw STFT."""
    r, i = x.data[:, 0], x.data[:, 1]
    m = np.hypot(r, i)
    power = 1.0 / p.exponent - 1.0
    norm = p.scale ** (-1.0 / p.exponent)
    safe = np.where(m > 0, m, 1.0)
    gain = np.where(m > 0, safe**power, 0.0) * norm
    dgain_over_m = np.where(m > 0, power * safe ** (power - 2.0), 0.0) * norm
    value = np.stack([r * gain, i * gain], axis=1)

    def vjp(g):
        gr, gi = g[:, 0], g[:, 1]
        shared = (gr * r + gi * i) * dgain_over_m
        return (np.stack([gr * gain + shared * r, gi * gain + shared * i], axis=1),)

    out = ag.custom([x], value, vjp)
    return out[:, 0], out[:, 1]


def istft_tensor(re: ag.Tensor, im: ag.Tensor, cfg: StftConfig, out_len: int) -> ag.Tensor:
    """Batched differentiable iSTFT of ``(B, F, K)`` Re/Im parts -> ``(B, out_len)``."""
    spec = re.data + 1j * im.data
    n_frames = spec.shape[-1]
    value = np.stack([istft(s, cfg, out_len) for s in spec])

    def vjp(g):
        parts = [istft_adjoint(gb, cfg, n_frames) for gb in g]
        return np.stack([a for a, _ in parts]), np.stack([b for _, b in parts])

    return ag.custom([re, im], value, vjp)


def stft_magnitude_tensor(wav: ag.Tensor, cfg: StftConfig) -> ag.Tensor:
    """Batched differentiable ``|stft(wav)|`` -> ``(B, F, K)``."""
    specs = np.stack([stft(w, cfg) for w in wav.data])
    n = wav.shape[-1]
    re = ag.custom([wav], specs.real, lambda g: (np.stack([stft_adjoint(gb, 0 * gb, cfg, n) for gb in g]),))
    im = ag.custom([wav], specs.imag, lambda g: (np.stack([stft_adjoint(0 * gb, gb, cfg, n) for gb in g]),))
    return ag.complex_abs(re, im)


def mel_loss_tensor(wav: ag.Tensor, ref: np.ndarray, cfg: MelLossConfig, fs: int) -> ag.Tensor:
    """Differentiable multi-scale Mel L1 loss averaged over the batch."""
    total = None
    for scfg, bands in cfg.scales():
        fb = mel_filterbank_for(scfg.fft_len, bands, fs)
        mel_hat = ag.einsum("bfk,fm->bmk", stft_magnitude_tensor(wav, scfg), fb.weights)
        mel_ref = np.stack([apply_mel(np.abs(stft(r, scfg)), fb) for r in ref])
        term = ag.abs(mel_hat - mel_ref).mean()
        total = term if total is None else total + term
    return total


def si_sdr_tensor(est: ag.Tensor, ref: np.ndarray) -> ag.Tensor:
    """Differentiable batched SI-SDR in dB (upper cap only), shape ``(B,)``."""
    ref_energy = np.sum(ref * ref, axis=1)
    alpha = (est * ref).sum(axis=1) * (1.0 / (ref_energy + SI_SDR_EPS))
    target = alpha.reshape(-1, 1) * ref
    residual = est - target
    t_energy = (target * target).sum(axis=1)
    r_energy = (residual * residual).sum(axis=1)
    ratio = t_energy / (r_energy + SI_SDR_EPS * t_energy)
    return ag.clip_max(ag.log(ratio) * (10.0 / np.log(10.0)), SI_SDR_CAP_DB)


def batch_loss(x0_hat: ag.Tensor, batch: list, cfg: TrainConfig):
    """Composite loss tensor plus float breakdown ``(tm, mel, sisnr)`` for one batch."""
    x0 = np.stack([b.x0 for b in batch])
    l_tm = ((x0_hat - x0) ** 2).mean()
    w = cfg.weights
    if w.lambda_mel == 0 and w.lambda_sisnr == 0:
        return l_tm, (float(l_tm.data), 0.0, 0.0)
    clean = np.stack([b.clean for b in batch])
    re, im = decompress_tensor(x0_hat, cfg.compression)
    wav = istft_tensor(re, im, cfg.stft, clean.shape[1])
    total = l_tm
    l_mel = l_si = 0.0
    if w.lambda_mel:
        mel = mel_loss_tensor(wav, clean, cfg.mel, cfg.sample_rate)
        total = total + w.lambda_mel * mel
        l_mel = float(mel.data)
    if w.lambda_sisnr:
        si = -si_sdr_tensor(wav, clean).mean()
        total = total + w.lambda_sisnr * si
        l_si = float(si.data)
    return total, (float(l_tm.data), l_mel, l_si)


# optimisers -----------------------------------------------------------------------


class Sgd:
    def __init__(self, lr: float):
        self.lr = lr

    def step(self, params: dict, grads: dict):
        for k, g in grads.items():
            params[k] = params[k] - self.lr * g


class Adam:
    def __init__(self, lr: float, b1: float = 0.9, b2: float = 0.999, eps: float = 1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, b1, b2, eps
        self.m, self.v, self.n = {}, {}, 0

    def step(self, params: dict, grads: dict):
        self.n += 1
        for k, g in grads.items():
            self.m[k] = self.b1 * self.m.get(k, 0.0) + (1 - self.b1) * g
            self.v[k] = self.b2 * self.v.get(k, 0.0) + (1 - self.b2) * g * g
            mh = self.m[k] / (1 - self.b1**self.n)
            vh = self.v[k] / (1 - self.b2**self.n)
            params[k] = params[k] - self.lr * mh / (np.sqrt(vh) + self.eps)


def train(dataset: list, path: ProbabilityPath, predictor: TrainablePredictor, cfg: TrainConfig = TrainConfig(),
          on_epoch=None) -> TrainResult:
    """Fit ``predictor`` in place by minimising the composite loss on perturbed samples.

    Each minibatch draws ``t ~ U[t_eps, t_max]`` and ``z ~ N(0, I)`` per
    utterance, forms ``x_t = mu_t + sigma_t z`` and takes one optimiser step.
    The run is a pure function of ``(dataset order, cfg, initial params)``.
    """
    if not dataset:
        raise ValueError("empty training set")
    rng = make_rng(cfg.seed, stream=11)
    opt = Sgd(cfg.lr) if cfg.optimizer == "sgd" else Adam(cfg.lr)
    names = sorted(predictor.params)
    log = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(dataset))
        sums = np.zeros(4)
        n_batches = 0
        for step, start in enumerate(range(0, len(order), cfg.batch_size)):
            batch = [dataset[i] for i in order[start : start + cfg.batch_size]]
            x0 = np.stack([b.x0 for b in batch])
            x1 = np.stack([b.x1 for b in batch])
            t = rng.uniform(path.t_eps, path.t_max, size=len(batch))
            z = rng.standard_normal(x0.shape)
            tt = t[:, None, None, None]
            x_t = path.mu(tt, x0, x1) + path.sigma(tt) * z
            tensors = predictor.tensors(trainable=True)
            x0_hat = predictor.forward(tensors, ag.Tensor(x_t), ag.Tensor(x1), t)
            loss, parts = batch_loss(x0_hat, batch, cfg)
            if not np.isfinite(loss.data):
                raise NumericalError(f"non-finite loss at epoch {epoch}, step {step}")
            grads = ag.grad(loss, [tensors[k] for k in names])
            opt.step(predictor.params, dict(zip(names, grads)))
            sums += (parts[0], parts[1], parts[2], float(loss.data))
            n_batches += 1
        tm, mel, si, total = (float(v) for v in sums / n_batches)
        entry = EpochLog(epoch, tm, mel, si, total)
        log.append(entry)
        logger.info("epoch %d: total=%.6f tm=%.6f mel=%.6f sisnr=%.4f", epoch, total, tm, mel, si)
        if on_epoch is not None:
            on_epoch(entry)
    return TrainResult(dict(predictor.params), log)


def gradient_variance(predictor: TrainablePredictor, path: ProbabilityPath, x0, x1, t: float,
                      n_draws: int = 100, seed: int = 0) -> tuple[dict, dict]:
    """Per-parameter gradient variance across ``z`` resamples for the TM and FM objectives.

    For FM the predictor output is read as a vector-field estimate and
    regressed on ``sigma'_t z + mu'_t``; for TM it is regressed on ``x0``. Both
    objectives see the same perturbed inputs. Returns ``(var_tm, var_fm)``.
    """
    x0 = np.asarray(x0, dtype=np.float64)[None]
    x1 = np.asarray(x1, dtype=np.float64)[None]
    rng = make_rng(seed, stream=13)
    names = sorted(predictor.params)
    tm_grads, fm_grads = [], []
    tarr = np.array([t])
    for _ in range(n_draws):
        z = rng.standard_normal(x0.shape)
        x_t = path.mu(t, x0, x1) + path.sigma(t) * z
        target_fm = vector_field_decomposed(path, t, z, x0, x1)
        for target, sink in ((x0, tm_grads), (target_fm, fm_grads)):
            tensors = predictor.tensors(trainable=True)
            out = predictor.forward(tensors, ag.Tensor(x_t), ag.Tensor(x1), tarr)
            loss = ((out - target) ** 2).mean()
            sink.append(ag.grad(loss, [tensors[k] for k in names]))
    var_tm = {k: np.var(np.stack([g[i] for g in tm_grads]), axis=0) for i, k in enumerate(names)}
    var_fm = {k: np.var(np.stack([g[i] for g in fm_grads]), axis=0) for i, k in enumerate(names)}
    return var_tm, var_fm
