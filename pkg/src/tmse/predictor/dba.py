"""Reduced-scale dual-path diffusion backbone for audio spectrograms.

Layout: input conv (4 -> C), a U-Net of residual blocks that resamples only
along frequency, ``L`` time-frequency blocks at the bottleneck and an output
conv (C -> 2). Each TF block applies

    h = h + alpha_t * T(CA(h))
    h = h + beta_f  * F(CA'(h))

with CA a squeeze-excitation channel attention, T a squeezed dilated
convolution stack along time and F a squeezed grouped linear map across
frequency. The timestep embedding enters every residual block and every
T-/F-block as a per-channel bias after its first convolution.

Tensors are ``(B, channels, freq, time)``.
"""

from __future__ import annotations

import zlib
from dataclasses import asdict, dataclass, field

import numpy as np

from .. import autograd as ag
from ..path import make_rng
from .base import TrainablePredictor
from .embedding import EmbeddingConfig, encode


@dataclass(frozen=True)
class DbaConfig:
    n_freq: int = 256
    channels: int = 8
    squeezed: int = 16
    tf_blocks: int = 2
    unet_depth: int = 1
    freq_stride: int = 2
    alpha_t: float = 1.0
    beta_f: float = 1.0
    embed_dim: int = 128
    fourier_scale: float = 16.0
    tcn_kernel: int = 3
    tcn_dilations: tuple = field(default=(1, 2, 4))
    groups: int = 4
    attn_reduction: int = 2
    bypass_attention: bool = False
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "tcn_dilations", tuple(int(d) for d in self.tcn_dilations))
        if min(self.channels, self.squeezed, self.freq_stride, self.tcn_kernel) < 1 or self.tf_blocks < 0:
            raise ValueError("DBA sizes must be positive")
        if self.n_freq % self.freq_stride**self.unet_depth:
            raise ValueError(
                f"n_freq={self.n_freq} not divisible by freq_stride**unet_depth="
                f"{self.freq_stride ** self.unet_depth}"
            )
        if self.squeezed % self.groups:
            raise ValueError("groups must divide the squeezed channel count")
        if self.tcn_kernel % 2 == 0:
            raise ValueError("tcn_kernel must be odd")

    @property
    def bottleneck_freq(self) -> int:
        return self.n_freq // self.freq_stride**self.unet_depth


class DbaLite(TrainablePredictor):
    kind = "dba"

    def __init__(self, cfg: DbaConfig = DbaConfig(), params: dict | None = None):
        self.cfg = cfg
        self.embedding = EmbeddingConfig(cfg.embed_dim, cfg.fourier_scale, cfg.seed)
        super().__init__(params if params is not None else self._init_params())

    def config_dict(self) -> dict:
        d = asdict(self.cfg)
        d["tcn_dilations"] = list(d["tcn_dilations"])
        return d

    # parameters -------------------------------------------------------------
    def _shapes(self) -> dict:
        c = self.cfg
        C, Cs, E = c.channels, c.squeezed, c.embed_dim
        Cr = max(1, C // c.attn_reduction)
        s = {
            "temb.w1": (E, E), "temb.b1": (E,), "temb.w2": (E, E), "temb.b2": (E,),
            "in.w": (C, 4, 3, 3), "in.b": (C,),
            "out.w": (2, C, 3, 3), "out.b": (2,),
        }

        def res(name):
            s.update({
                f"{name}.c1.w": (C, C, 3, 3), f"{name}.c1.b": (C,),
                f"{name}.c2.w": (C, C, 3, 3), f"{name}.c2.b": (C,),
                f"{name}.t.w": (E, C), f"{name}.t.b": (C,),
            })

        for d in range(c.unet_depth):
            res(f"enc{d}")
            res(f"dec{d}")
            s[f"down{d}.w"] = (C, C, c.freq_stride, 3)
            s[f"down{d}.b"] = (C,)
            s[f"up{d}.w"] = (C, C, 3, 3)
            s[f"up{d}.b"] = (C,)
        Fb, G = c.bottleneck_freq, c.groups
        for l in range(c.tf_blocks):
            for part in ("tb", "fb"):
                p = f"tf{l}.{part}"
                s.update({
                    f"{p}.ca.w1": (C, Cr), f"{p}.ca.b1": (Cr,), f"{p}.ca.w2": (Cr, C), f"{p}.ca.b2": (C,),
                    f"{p}.in.w": (Cs, C, 1, 1), f"{p}.in.b": (Cs,),
                    f"{p}.t.w": (E, Cs), f"{p}.t.b": (Cs,),
                    f"{p}.out.w": (C, Cs, 1, 1), f"{p}.out.b": (C,),
                })
            for i, _ in enumerate(c.tcn_dilations):
                s[f"tf{l}.tb.tcn{i}.w"] = (Cs, Cs, 1, c.tcn_kernel)
                s[f"tf{l}.tb.tcn{i}.b"] = (Cs,)
            s[f"tf{l}.fb.lin.w"] = (G, Fb, Fb)
            s[f"tf{l}.fb.lin.b"] = (G, Fb)
        return s

    def _init_params(self) -> dict:
        params = {}
        for name, shape in self._shapes().items():
            rng = make_rng(self.cfg.seed, stream=zlib.crc32(name.encode()))
            if name.endswith(".b") or name.endswith(".b1") or name.endswith(".b2"):
                params[name] = np.zeros(shape) if "ca." not in name else 0.1 * rng.standard_normal(shape)
                continue
            if len(shape) == 4:
                fan_in = int(np.prod(shape[1:]))
            elif len(shape) == 3:
                fan_in = shape[-1]
            else:
                fan_in = shape[0]
            params[name] = rng.standard_normal(shape) / np.sqrt(fan_in)
        return params

    # building blocks ----------------------------------------------------------
    @staticmethod
    def _bias(temb: ag.Tensor, p: dict, name: str) -> ag.Tensor:
        v = temb @ p[f"{name}.w"] + p[f"{name}.b"]
        return v.reshape(v.shape[0], v.shape[1], 1, 1)

    def _resblock(self, h, temb, p, name):
        y = ag.conv2d(ag.silu(h), p[f"{name}.c1.w"], p[f"{name}.c1.b"], padding=1)
        y = y + self._bias(temb, p, f"{name}.t")
        y = ag.conv2d(ag.silu(y), p[f"{name}.c2.w"], p[f"{name}.c2.b"], padding=1)
        return h + y

    def _attention(self, h, p, name):
        if self.cfg.bypass_attention:
            return h
        s = h.mean(axis=(2, 3))
        a = ag.silu(s @ p[f"{name}.w1"] + p[f"{name}.b1"])
        a = ag.sigmoid(a @ p[f"{name}.w2"] + p[f"{name}.b2"])
        return h * a.reshape(a.shape[0], a.shape[1], 1, 1)

    def _time_block(self, h, temb, p, name):
        k = self.cfg.tcn_kernel
        y = ag.conv2d(h, p[f"{name}.in.w"], p[f"{name}.in.b"]) + self._bias(temb, p, f"{name}.t")
        for i, d in enumerate(self.cfg.tcn_dilations):
            pad = d * (k - 1) // 2
            y = y + ag.conv2d(ag.silu(y), p[f"{name}.tcn{i}.w"], p[f"{name}.tcn{i}.b"],
                              padding=((0, 0), (pad, pad)), dilation=(1, d))
        return ag.conv2d(ag.silu(y), p[f"{name}.out.w"], p[f"{name}.out.b"])

    def _freq_block(self, h, temb, p, name):
        c = self.cfg
        y = ag.conv2d(h, p[f"{name}.in.w"], p[f"{name}.in.b"]) + self._bias(temb, p, f"{name}.t")
        y = ag.silu(y)
        B, Cs, F, K = y.shape
        G = c.groups
        yg = y.reshape(B, G, Cs // G, F, K)
        yg = ag.einsum("bgcfk,gef->bgcek", yg, p[f"{name}.lin.w"]) + p[f"{name}.lin.b"].reshape(1, G, 1, F, 1)
        y = ag.silu(yg.reshape(B, Cs, F, K))
        return ag.conv2d(y, p[f"{name}.out.w"], p[f"{name}.out.b"])

    def _upsample(self, h):
        s = self.cfg.freq_stride
        B, C, F, K = h.shape
        return ag.linear_op(
            h,
            lambda x: np.repeat(x, s, axis=2),
            lambda g: g.reshape(B, C, F, s, K).sum(axis=3),
        )

    # forward ----------------------------------------------------------------------
    def forward(self, p: dict, x_t, x1, t) -> ag.Tensor:
        c = self.cfg
        if x_t.ndim != 4 or x_t.shape[1] != 2:
            raise ValueError(f"expected (B, 2, F, K) input, got {x_t.shape}")
        if x_t.shape[2] != c.n_freq:
            raise ValueError(f"DBA built for {c.n_freq} bins, got {x_t.shape[2]}")
        temb = encode(p, t, self.embedding)
        h = ag.conv2d(ag.concat([x_t, x1], axis=1), p["in.w"], p["in.b"], padding=1)
        skips = []
        for d in range(c.unet_depth):
            h = self._resblock(h, temb, p, f"enc{d}")
            skips.append(h)
            h = ag.conv2d(h, p[f"down{d}.w"], p[f"down{d}.b"], stride=(c.freq_stride, 1),
                          padding=((0, 0), (1, 1)))
        for l in range(c.tf_blocks):
            h = h + c.alpha_t * self._time_block(self._attention(h, p, f"tf{l}.tb.ca"), temb, p, f"tf{l}.tb")
            h = h + c.beta_f * self._freq_block(self._attention(h, p, f"tf{l}.fb.ca"), temb, p, f"tf{l}.fb")
        for d in reversed(range(c.unet_depth)):
            h = ag.conv2d(self._upsample(h), p[f"up{d}.w"], p[f"up{d}.b"], padding=1)
            h = self._resblock(h + skips[d], temb, p, f"dec{d}")
        return ag.conv2d(ag.silu(h), p["out.w"], p["out.b"], padding=1)


def dba_forward(params: dict, cfg: DbaConfig, x_t, x1, t) -> np.ndarray:
    """Plain-array forward pass; ``x_t``/``x1`` are ``(2, F, K)`` or ``(B, 2, F, K)``."""
    return DbaLite(cfg, params=params).predict(x_t, x1, t)
