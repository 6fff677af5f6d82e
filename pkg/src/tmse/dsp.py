"""Signal representation layer: WAV I/O, STFT/iSTFT, magnitude compression, Mel filterbanks."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.io import wavfile

logger = logging.getLogger(__name__)

PCM16_SCALE = 32767.0


class WavError(ValueError):
    """Raised for unreadable, malformed or unsupported WAV files."""


@dataclass
class Waveform:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ValueError("waveform must be one-dimensional")
        if int(self.sample_rate) <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        self.sample_rate = int(self.sample_rate)
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("waveform contains non-finite samples")

    def __len__(self):
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate


def load_wav(path, channel: str = "first") -> Waveform:
    """Read a PCM16 or float32 RIFF/WAVE file as a mono waveform.

    ``channel`` selects ``"first"`` (channel 0) or ``"mean"`` (average of all
    channels) for multichannel files. No resampling is performed.
    """
    path = Path(path)
    if not path.is_file():
        raise WavError(f"no such file: {path}")
    if path.stat().st_size == 0:
        raise WavError(f"empty file: {path}")
    try:
        rate, data = wavfile.read(path)
    except Exception as exc:  # scipy raises ValueError/EOFError on bad headers
        raise WavError(f"malformed WAV file {path}: {exc}") from exc
    if data.dtype == np.int16:
        data = data.astype(np.float64) / PCM16_SCALE
    elif data.dtype == np.float32:
        data = data.astype(np.float64)
    else:
        raise WavError(f"unsupported WAV encoding {data.dtype} in {path}; only PCM16 and float32")
    if data.shape[0] == 0:
        raise WavError(f"WAV file has no samples: {path}")
    if data.ndim == 2:
        if channel == "first":
            data = data[:, 0]
        elif channel == "mean":
            data = data.mean(axis=1)
        else:
            raise ValueError(f"unknown channel mode {channel!r}")
    return Waveform(data, rate)


def save_wav(wave: Waveform, path, encoding: str = "pcm16") -> None:
    """Write ``wave`` as PCM16 or float32. Samples outside [-1, 1] are clipped."""
    x = np.asarray(wave.samples, dtype=np.float64)
    n_clipped = int(np.count_nonzero(np.abs(x) > 1.0))
    if n_clipped:
        logger.warning("clipped %d samples outside [-1, 1] while writing %s", n_clipped, path)
    x = np.clip(x, -1.0, 1.0)
    if encoding == "pcm16":
        data = np.round(x * PCM16_SCALE).astype(np.int16)
    elif encoding == "float32":
        data = x.astype(np.float32)
    else:
        raise ValueError(f"unsupported encoding {encoding!r}; use 'pcm16' or 'float32'")
    try:
        wavfile.write(path, wave.sample_rate, data)
    except OSError as exc:
        raise WavError(f"cannot write {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# STFT
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StftConfig:
    window_len: int = 510
    hop: int = 128
    fft_len: int | None = None
    window: str = "sqrt_hann"
    center: bool = True

    def __post_init__(self):
        if self.fft_len is None:
            object.__setattr__(self, "fft_len", self.window_len)
        if not 0 < self.hop <= self.window_len:
            raise ValueError(f"need 0 < hop <= window_len, got hop={self.hop}")
        if self.fft_len < self.window_len:
            raise ValueError("fft_len must be >= window_len")
        if self.window not in ("sqrt_hann", "hann", "rect"):
            raise ValueError(f"unknown window {self.window!r}")

    @property
    def n_freq(self) -> int:
        return self.fft_len // 2 + 1

    def num_frames(self, n_samples: int) -> int:
        if self.center:
            return n_samples // self.hop + 1
        return 1 + max(n_samples - self.fft_len, 0) // self.hop

    def window_array(self) -> np.ndarray:
        n = np.arange(self.window_len)
        hann = 0.5 - 0.5 * np.cos(2.0 * np.pi * n / self.window_len)  # periodic
        if self.window == "sqrt_hann":
            w = np.sqrt(hann)
        elif self.window == "hann":
            w = hann
        else:
            w = np.ones(self.window_len)
        left = (self.fft_len - self.window_len) // 2
        return np.pad(w, (left, self.fft_len - self.window_len - left))


def _frame_starts(n_frames: int, hop: int) -> np.ndarray:
    return np.arange(n_frames) * hop


def _pad_signal(x: np.ndarray, cfg: StftConfig) -> np.ndarray:
    n_frames = cfg.num_frames(x.shape[-1])
    pad_left = cfg.fft_len // 2 if cfg.center else 0
    total = (n_frames - 1) * cfg.hop + cfg.fft_len
    pad_right = total - pad_left - x.shape[-1]
    return np.pad(x, (pad_left, max(pad_right, 0)))[:total]


def stft(x, cfg: StftConfig = StftConfig()) -> np.ndarray:
    """One-sided STFT of a 1-D signal; returns a complex ``(n_freq, n_frames)`` array.

    With ``center=True`` the signal is zero-padded by ``fft_len // 2`` on both
    sides so frame ``k`` is centred on sample ``k * hop``.
    """
    if isinstance(x, Waveform):
        x = x.samples
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] < 1:
        raise ValueError("stft expects a non-empty 1-D signal")
    padded = _pad_signal(x, cfg)
    frames = np.lib.stride_tricks.sliding_window_view(padded, cfg.fft_len)[:: cfg.hop]
    return np.fft.rfft(frames * cfg.window_array(), n=cfg.fft_len, axis=-1).T


def _window_sum(cfg: StftConfig, n_frames: int) -> np.ndarray:
    w2 = cfg.window_array() ** 2
    total = (n_frames - 1) * cfg.hop + cfg.fft_len
    acc = np.zeros(total)
    for start in _frame_starts(n_frames, cfg.hop):
        acc[start : start + cfg.fft_len] += w2
    return acc


def _crop(y: np.ndarray, cfg: StftConfig, n_frames: int, out_len: int | None) -> np.ndarray:
    offset = cfg.fft_len // 2 if cfg.center else 0
    if out_len is None:
        out_len = n_frames * cfg.hop if cfg.center else y.shape[0]
    y = y[offset : offset + out_len]
    if y.shape[0] < out_len:
        y = np.pad(y, (0, out_len - y.shape[0]))
    return y


def istft(spec: np.ndarray, cfg: StftConfig = StftConfig(), out_len: int | None = None) -> np.ndarray:
    """Inverse of :func:`stft` by weighted overlap-add.

    The overlap-added synthesis is divided by the overlap-added squared
    window, which gives exact reconstruction whenever that sum is nonzero,
    i.e. also for window/hop pairs that are only approximately COLA
    (510/128 has 0.13 % ripple). Without ``out_len`` the result has
    ``n_frames * hop`` samples.
    """
    spec = np.asarray(spec)
    if spec.ndim != 2 or spec.shape[0] != cfg.n_freq:
        raise ValueError(f"spectrogram shape {spec.shape} incompatible with n_freq={cfg.n_freq}")
    n_frames = spec.shape[1]
    frames = np.fft.irfft(spec.T, n=cfg.fft_len, axis=-1) * cfg.window_array()
    total = (n_frames - 1) * cfg.hop + cfg.fft_len
    y = np.zeros(total)
    for k, start in enumerate(_frame_starts(n_frames, cfg.hop)):
        y[start : start + cfg.fft_len] += frames[k]
    wsum = _window_sum(cfg, n_frames)
    nz = wsum > 1e-10
    y[nz] /= wsum[nz]
    return _crop(y, cfg, n_frames, out_len)


# Adjoint (transpose) maps, used to back-propagate through the transforms.


def stft_adjoint(grad_re: np.ndarray, grad_im: np.ndarray, cfg: StftConfig, n_samples: int) -> np.ndarray:
    """Gradient w.r.t. the signal given gradients w.r.t. Re/Im of ``stft(x)``."""
    n = cfg.fft_len
    g = (grad_re + 1j * grad_im).T.copy()
    g[:, 1:] *= n / 2.0
    g[:, 0] *= n
    if n % 2 == 0:
        g[:, -1] *= 2.0
    frame_grads = np.fft.irfft(g, n=n, axis=-1) * cfg.window_array()
    n_frames = frame_grads.shape[0]
    acc = np.zeros((n_frames - 1) * cfg.hop + n)
    for k, start in enumerate(_frame_starts(n_frames, cfg.hop)):
        acc[start : start + n] += frame_grads[k]
    offset = n // 2 if cfg.center else 0
    out = acc[offset : offset + n_samples]
    if out.shape[0] < n_samples:
        out = np.pad(out, (0, n_samples - out.shape[0]))
    return out


def istft_adjoint(grad: np.ndarray, cfg: StftConfig, n_frames: int) -> tuple[np.ndarray, np.ndarray]:
    """Gradients w.r.t. Re/Im of the spectrogram given a gradient on ``istft`` output."""
    n = cfg.fft_len
    total = (n_frames - 1) * cfg.hop + n
    offset = n // 2 if cfg.center else 0
    g = np.zeros(total)
    m = min(grad.shape[0], total - offset)
    g[offset : offset + m] = grad[:m]
    wsum = _window_sum(cfg, n_frames)
    nz = wsum > 1e-10
    g[nz] /= wsum[nz]
    frames = np.lib.stride_tricks.sliding_window_view(g, n)[:: cfg.hop][:n_frames]
    spec = np.fft.rfft(frames * cfg.window_array(), n=n, axis=-1) * (2.0 / n)
    spec[:, 0] *= 0.5
    if n % 2 == 0:
        spec[:, -1] *= 0.5
    spec = spec.T
    re, im = spec.real.copy(), spec.imag.copy()
    im[0] = 0.0
    if n % 2 == 0:
        im[-1] = 0.0
    return re, im


# ---------------------------------------------------------------------------
# Magnitude compression
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CompressionParams:
    exponent: float = 0.5
    scale: float = 0.33

    def __post_init__(self):
        if not 0.0 < self.exponent <= 1.0:
            raise ValueError("compression exponent must lie in (0, 1]")
        if self.scale <= 0.0:
            raise ValueError("compression scale must be positive")


def compress(spec: np.ndarray, p: CompressionParams = CompressionParams()) -> np.ndarray:
    """Map ``y -> scale * |y|**exponent * exp(j angle(y))`` and stack Re/Im.

    Returns a real ``(2, F, K)`` array. Zero stays zero (its phase is taken as 0).
    """
    spec = np.asarray(spec, dtype=np.complex128)
    mag = np.abs(spec)
    gain = np.zeros_like(mag)
    nz = mag > 0
    gain[nz] = p.scale * mag[nz] ** (p.exponent - 1.0)
    out = spec * gain
    return np.stack([out.real, out.imag])


def decompress(cspec: np.ndarray, p: CompressionParams = CompressionParams()) -> np.ndarray:
    """Analytic inverse of :func:`compress`; returns a complex ``(F, K)`` array."""
    cspec = np.asarray(cspec, dtype=np.float64)
    if cspec.shape[0] != 2:
        raise ValueError("compressed spectrogram must have a leading Re/Im axis of size 2")
    z = cspec[0] + 1j * cspec[1]
    mag = np.abs(z)
    gain = np.zeros_like(mag)
    nz = mag > 0
    gain[nz] = (mag[nz] / p.scale) ** (1.0 / p.exponent) / mag[nz]
    return z * gain


# ---------------------------------------------------------------------------
# Mel filterbank
# ---------------------------------------------------------------------------

_F_SP = 200.0 / 3.0
_MIN_LOG_HZ = 1000.0
_MIN_LOG_MEL = _MIN_LOG_HZ / _F_SP
_LOGSTEP = np.log(6.4) / 27.0


def hz_to_mel(f):
    """Slaney mel scale: linear below 1 kHz, logarithmic above."""
    f = np.asarray(f, dtype=np.float64)
    return np.where(
        f >= _MIN_LOG_HZ,
        _MIN_LOG_MEL + np.log(np.maximum(f, _MIN_LOG_HZ) / _MIN_LOG_HZ) / _LOGSTEP,
        f / _F_SP,
    )


def mel_to_hz(m):
    m = np.asarray(m, dtype=np.float64)
    return np.where(
        m >= _MIN_LOG_MEL,
        _MIN_LOG_HZ * np.exp(_LOGSTEP * (np.maximum(m, _MIN_LOG_MEL) - _MIN_LOG_MEL)),
        _F_SP * m,
    )


@dataclass(frozen=True)
class MelFilterbank:
    weights: np.ndarray = field(repr=False)  # (n_freq, n_mels)
    fs: float
    f_max: float

    @property
    def n_freq(self) -> int:
        return self.weights.shape[0]

    @property
    def n_mels(self) -> int:
        return self.weights.shape[1]

    def to_csv(self, path) -> None:
        """One row per frequency bin, one column per Mel band."""
        header = ",".join(f"mel{j}" for j in range(self.n_mels))
        np.savetxt(path, self.weights, delimiter=",", header=header, comments="")


def build_mel_filterbank(n_freq: int, n_mels: int, fs: float, f_max: float | None = None) -> MelFilterbank:
    """Triangular filters equally spaced on the Slaney mel scale over ``[0, f_max]``.

    Each triangle is normalised to unit peak over the bin grid. Raises
    ``ValueError`` if two band centres round to the same frequency bin or a
    band covers no bin at all.
    """
    if f_max is None:
        f_max = fs / 2.0
    if n_mels < 1 or n_mels >= n_freq:
        raise ValueError(f"need 1 <= n_mels < n_freq, got n_mels={n_mels}, n_freq={n_freq}")
    if not 0.0 < f_max <= fs / 2.0:
        raise ValueError(f"f_max={f_max} must lie in (0, fs/2]")
    bin_hz = np.linspace(0.0, fs / 2.0, n_freq)
    edges = mel_to_hz(np.linspace(0.0, hz_to_mel(f_max), n_mels + 2))
    centre_bins = np.round(edges[1:-1] / bin_hz[1]).astype(int)
    if np.any(np.diff(centre_bins) == 0):
        raise ValueError(
            f"degenerate Mel bands: {n_mels} bands over {n_freq} bins map two centres to one bin"
        )
    lower, centre, upper = edges[:-2], edges[1:-1], edges[2:]
    rising = (bin_hz[:, None] - lower) / (centre - lower)
    falling = (upper - bin_hz[:, None]) / (upper - centre)
    weights = np.maximum(0.0, np.minimum(rising, falling))
    peaks = weights.max(axis=0)
    if np.any(peaks <= 0):
        raise ValueError(f"degenerate Mel bands: some of the {n_mels} bands cover no frequency bin")
    return MelFilterbank(weights / peaks, float(fs), float(f_max))


def apply_mel(mag: np.ndarray, fb: MelFilterbank) -> np.ndarray:
    """Project an ``(F, K)`` magnitude spectrogram onto the Mel bands -> ``(n_mels, K)``."""
    mag = np.asarray(mag)
    if mag.shape[0] != fb.n_freq:
        raise ValueError(f"magnitude has {mag.shape[0]} bins, filterbank expects {fb.n_freq}")
    return fb.weights.T @ mag
