"""Slow, independent reference implementations used by the tests.

None of these import the package; they are written from the textbook
definitions with explicit loops or arbitrary precision so that agreement
with the fast code is meaningful.
"""

import cmath
import math

import mpmath as mp

mp.mp.dps = 40


def logistic_mean(t, k, x0, x1):
    t, k, x0, x1 = (mp.mpf(v) for v in (t, k, x0, x1))
    e = mp.e ** (k / 2)
    return x0 + (x1 - x0) / (e - 1) * ((1 + e) / (1 + mp.e ** (-k * (t - mp.mpf("0.5")))) - 1)


def logistic_mean_derivative(t, k, x0, x1):
    return mp.diff(lambda s: logistic_mean(s, k, x0, x1), mp.mpf(t))


def ouve_mean(t, gamma, x0, x1):
    t, gamma, x0, x1 = (mp.mpf(v) for v in (t, gamma, x0, x1))
    return mp.e ** (-gamma * t) * x0 + (1 - mp.e ** (-gamma * t)) * x1


def bridge_std_derivative(t, sigma):
    return mp.diff(lambda s: mp.mpf(sigma) * mp.sqrt(s * (1 - s)), mp.mpf(t))


def periodic_hann(n):
    return [0.5 - 0.5 * math.cos(2 * math.pi * i / n) for i in range(n)]


def dft_frame(frame, n_freq):
    """One-sided DFT by direct summation."""
    n = len(frame)
    return [sum(frame[m] * cmath.exp(-2j * math.pi * f * m / n) for m in range(n)) for f in range(n_freq)]


def naive_stft(x, window, hop, center=True):
    """Frame, window and transform one frame at a time (zero padding, centred frames)."""
    n = len(window)
    pad = n // 2 if center else 0
    padded = [0.0] * pad + list(x) + [0.0] * (n + pad)
    n_frames = len(x) // hop + 1 if center else 1 + (len(x) - n) // hop
    cols = []
    for k in range(n_frames):
        seg = padded[k * hop : k * hop + n]
        cols.append(dft_frame([s * w for s, w in zip(seg, window)], n // 2 + 1))
    return [[cols[k][f] for k in range(n_frames)] for f in range(n // 2 + 1)]


def slaney_hz_to_mel(f):
    if f < 1000.0:
        return 3.0 * f / 200.0
    return 15.0 + 27.0 * math.log(f / 1000.0) / math.log(6.4)


def slaney_mel_to_hz(m):
    if m < 15.0:
        return 200.0 * m / 3.0
    return 1000.0 * math.exp((m - 15.0) * math.log(6.4) / 27.0)


def triangle_filterbank(n_freq, n_mels, fs):
    """Unit-peak triangles with Slaney-spaced edges, as nested lists ``[bin][band]``."""
    top = slaney_hz_to_mel(fs / 2.0)
    edges = [slaney_mel_to_hz(top * i / (n_mels + 1)) for i in range(n_mels + 2)]
    freqs = [fs / 2.0 * i / (n_freq - 1) for i in range(n_freq)]
    w = [[0.0] * n_mels for _ in range(n_freq)]
    for j in range(n_mels):
        lo, c, hi = edges[j], edges[j + 1], edges[j + 2]
        for i, f in enumerate(freqs):
            w[i][j] = max(0.0, min((f - lo) / (c - lo), (hi - f) / (hi - c)))
        peak = max(w[i][j] for i in range(n_freq))
        for i in range(n_freq):
            w[i][j] /= peak
    return w


def naive_apply_mel(mag, weights):
    n_freq, n_mels, n_frames = len(weights), len(weights[0]), len(mag[0])
    return [[sum(weights[i][j] * mag[i][k] for i in range(n_freq)) for k in range(n_frames)] for j in range(n_mels)]


def si_sdr(est, ref, eps=1e-8):
    est = [mp.mpf(float(v)) for v in est]
    ref = [mp.mpf(float(v)) for v in ref]
    alpha = mp.fsum(e * r for e, r in zip(est, ref)) / (mp.fsum(r * r for r in ref) + eps)
    target = [alpha * r for r in ref]
    resid = [e - t for e, t in zip(est, target)]
    t_e = mp.fsum(v * v for v in target)
    r_e = mp.fsum(v * v for v in resid)
    return float(10 * mp.log10(t_e / (r_e + eps * t_e)))


def mean_sq_diff(a, b):
    total, n = 0.0, 0
    for u, v in zip(a, b):
        total += abs(u - v) ** 2
        n += 1
    return total / n
