import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tmse.dsp import (
    CompressionParams,
    StftConfig,
    Waveform,
    WavError,
    apply_mel,
    build_mel_filterbank,
    compress,
    decompress,
    hz_to_mel,
    istft,
    istft_adjoint,
    load_wav,
    mel_to_hz,
    save_wav,
    stft,
    stft_adjoint,
)
from tmse.losses import MEL_BANDS, MEL_FRAME_SIZES

from . import oracles

CFG = StftConfig()


def rel_err(a, b):
    return np.linalg.norm(np.ravel(a - b)) / np.linalg.norm(np.ravel(b))


# ---------------------------------------------------------------------------
# Waveform and WAV files
# ---------------------------------------------------------------------------


class TestWaveform:
    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            Waveform(np.array([0.0, np.nan]), 16000)

    def test_rejects_bad_rate(self):
        with pytest.raises(ValueError):
            Waveform(np.zeros(4), 0)

    def test_duration(self):
        assert Waveform(np.zeros(16000), 16000).duration == 1.0


class TestWavIO:
    def test_one_second_header(self, tmp_path):
        save_wav(Waveform(np.zeros(16000), 16000), tmp_path / "a.wav")
        w = load_wav(tmp_path / "a.wav")
        assert len(w) == 16000 and w.sample_rate == 16000
        assert not np.any(w.samples)

    def test_sine_pcm16_round_trip(self, tmp_path):
        x = 0.8 * np.sin(2 * np.pi * 440 * np.arange(8000) / 16000)
        save_wav(Waveform(x, 16000), tmp_path / "s.wav")
        err = np.max(np.abs(load_wav(tmp_path / "s.wav").samples - x))
        assert err < 2.0**-15 + 1e-12

    def test_uniform_noise_round_trip(self, tmp_path):
        x = np.random.default_rng(0).uniform(-0.9, 0.9, 5000)
        save_wav(Waveform(x, 8000), tmp_path / "u.wav")
        assert np.max(np.abs(load_wav(tmp_path / "u.wav").samples - x)) < 2.0**-14

    def test_float32_round_trip(self, tmp_path):
        x = np.random.default_rng(1).uniform(-1, 1, 1000)
        save_wav(Waveform(x, 16000), tmp_path / "f.wav", encoding="float32")
        np.testing.assert_allclose(load_wav(tmp_path / "f.wav").samples, x, atol=1e-7)

    def test_clipping_is_logged(self, tmp_path, caplog):
        with caplog.at_level(logging.WARNING):
            save_wav(Waveform(np.array([1.5, -2.0, 0.1]), 16000), tmp_path / "c.wav")
        assert "clipped 2 samples" in caplog.text
        np.testing.assert_allclose(load_wav(tmp_path / "c.wav").samples[:2], [1.0, -1.0])

    def test_multichannel(self, tmp_path):
        from scipy.io import wavfile

        data = np.stack([np.full(10, 0.5), np.full(10, -0.25)], axis=1).astype(np.float32)
        wavfile.write(tmp_path / "m.wav", 16000, data)
        np.testing.assert_allclose(load_wav(tmp_path / "m.wav").samples, 0.5)
        np.testing.assert_allclose(load_wav(tmp_path / "m.wav", channel="mean").samples, 0.125)

    def test_unsupported_encoding(self, tmp_path):
        from scipy.io import wavfile

        wavfile.write(tmp_path / "i32.wav", 16000, np.zeros(10, dtype=np.int32))
        with pytest.raises(WavError):
            load_wav(tmp_path / "i32.wav")

    def test_malformed_and_empty(self, tmp_path):
        (tmp_path / "junk.wav").write_bytes(b"not a wav file at all")
        with pytest.raises(WavError):
            load_wav(tmp_path / "junk.wav")
        from scipy.io import wavfile

        wavfile.write(tmp_path / "e.wav", 16000, np.zeros(0, dtype=np.int16))
        with pytest.raises(WavError):
            load_wav(tmp_path / "e.wav")

    def test_unwritable(self, tmp_path):
        with pytest.raises(WavError):
            save_wav(Waveform(np.zeros(4), 16000), tmp_path / "missing" / "x.wav")


# ---------------------------------------------------------------------------
# STFT
# ---------------------------------------------------------------------------


class TestStft:
    def test_shape(self):
        assert CFG.n_freq == 256
        assert stft(np.zeros(16000)).shape == (256, 126)

    def test_zero(self):
        assert not np.any(stft(np.zeros(1000)))
        assert not np.any(istft(np.zeros((256, 10), complex)))

    def test_matches_direct_dft(self):
        cfg = StftConfig(window_len=16, hop=4)
        x = np.random.default_rng(2).standard_normal(37)
        window = [np.sqrt(w) for w in oracles.periodic_hann(16)]
        ref = np.array(oracles.naive_stft(x, window, 4))
        np.testing.assert_allclose(stft(x, cfg), ref, atol=1e-12)

    def test_sinusoid_peak_bin(self):
        b = 40
        n = np.arange(16000)
        x = np.cos(2 * np.pi * b * n / CFG.fft_len)
        mag = np.abs(stft(x))
        assert np.all(np.argmax(mag[:, 3:-3], axis=0) == b)

    def test_round_trip_random(self):
        x = np.random.default_rng(3).standard_normal(16000)
        assert rel_err(istft(stft(x), CFG, len(x)), x) < 1e-6

    @settings(max_examples=15, deadline=None)
    @given(n=st.integers(1000, 64000), seed=st.integers(0, 2**31))
    def test_round_trip_lengths(self, n, seed):
        x = np.random.default_rng(seed).standard_normal(n)
        assert rel_err(istft(stft(x), CFG, n), x) < 1e-6

    def test_default_output_length(self):
        assert istft(np.zeros((256, 256), complex)).shape == (32768,)

    def test_linearity(self):
        rng = np.random.default_rng(4)
        x, y = rng.standard_normal((2, 4000))
        lhs = stft(2.5 * x - 0.7 * y)
        rhs = 2.5 * stft(x) - 0.7 * stft(y)
        assert rel_err(lhs, rhs) < 1e-9

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            istft(np.zeros((100, 4), complex))

    def test_bad_config(self):
        with pytest.raises(ValueError):
            StftConfig(window_len=16, hop=20)
        with pytest.raises(ValueError):
            StftConfig(window_len=16, fft_len=8)

    def test_parseval_constant(self):
        """Two-sided energy over input energy is the same constant for every input."""
        rng = np.random.default_rng(5)
        n = CFG.fft_len
        ratios = []
        for _ in range(20):
            x = rng.standard_normal(64000)
            e = np.abs(stft(x)) ** 2
            two_sided = e[0] + 2 * e[1:-1].sum(axis=0) + (e[-1] if n % 2 == 0 else 2 * e[-1])
            ratios.append(two_sided.sum() / n / np.sum(x**2))
        ratios = np.array(ratios)
        assert np.var(ratios / ratios.mean()) < 1e-6
        # the constant is the overlap-added window energy per sample, less the thinner edges
        np.testing.assert_allclose(ratios.mean(), np.sum(CFG.window_array() ** 2) / CFG.hop, rtol=2e-3)

    def test_adjoints(self):
        """<stft x, g> = <x, stft^T g> and likewise for istft."""
        rng = np.random.default_rng(6)
        cfg = StftConfig(window_len=30, hop=8)
        x = rng.standard_normal(200)
        spec = stft(x, cfg)
        g_re, g_im = rng.standard_normal((2,) + spec.shape)
        lhs = np.sum(spec.real * g_re + spec.imag * g_im)
        np.testing.assert_allclose(lhs, np.dot(x, stft_adjoint(g_re, g_im, cfg, 200)), rtol=1e-10)
        s_re, s_im = rng.standard_normal((2,) + spec.shape)
        g = rng.standard_normal(200)
        y = istft(s_re + 1j * s_im, cfg, 200)
        a_re, a_im = istft_adjoint(g, cfg, spec.shape[1])
        np.testing.assert_allclose(np.dot(y, g), np.sum(s_re * a_re + s_im * a_im), rtol=1e-10)


# ---------------------------------------------------------------------------
# Compression
# ---------------------------------------------------------------------------


class TestCompression:
    def test_magnitude_four(self):
        y = np.array([[4.0 * np.exp(0.3j)]])
        c = compress(y)
        z = c[0] + 1j * c[1]
        np.testing.assert_allclose(np.abs(z), 0.66)
        np.testing.assert_allclose(np.angle(z), 0.3)
        np.testing.assert_allclose(decompress(c), y)

    def test_zero_fixed_point(self):
        y = np.zeros((3, 2), complex)
        assert not np.any(compress(y))
        assert not np.any(decompress(compress(y)))

    def test_round_trip(self):
        rng = np.random.default_rng(7)
        y = rng.standard_normal((256, 50)) + 1j * rng.standard_normal((256, 50))
        assert rel_err(decompress(compress(y)), y) < 1e-9

    @given(a=st.floats(0.05, 1.0), b=st.floats(0.01, 10.0), seed=st.integers(0, 1000))
    @settings(max_examples=30, deadline=None)
    def test_round_trip_any_params(self, a, b, seed):
        rng = np.random.default_rng(seed)
        y = rng.standard_normal((4, 5)) + 1j * rng.standard_normal((4, 5))
        p = CompressionParams(a, b)
        assert rel_err(decompress(compress(y, p), p), y) < 1e-9

    def test_invalid_params(self):
        with pytest.raises(ValueError):
            CompressionParams(1.5, 0.3)
        with pytest.raises(ValueError):
            CompressionParams(0.5, 0.0)


# ---------------------------------------------------------------------------
# Mel filterbank
# ---------------------------------------------------------------------------


class TestMel:
    def test_scale_matches_reference(self):
        for f in (0.0, 440.0, 999.0, 1000.0, 3000.0, 8000.0):
            assert hz_to_mel(f) == pytest.approx(oracles.slaney_hz_to_mel(f), rel=1e-12, abs=1e-12)
            assert mel_to_hz(hz_to_mel(f)) == pytest.approx(f, rel=1e-12, abs=1e-9)

    def test_shape_and_sign(self):
        fb = build_mel_filterbank(256, 80, 16000)
        assert fb.weights.shape == (256, 80)
        assert np.all(fb.weights >= 0)

    def test_matches_reference_construction(self):
        fb = build_mel_filterbank(33, 10, 16000)
        np.testing.assert_allclose(fb.weights, oracles.triangle_filterbank(33, 10, 16000), atol=1e-12)

    def test_unimodal_columns(self):
        w = build_mel_filterbank(256, 80, 16000).weights
        for col in w.T:
            peak = int(np.argmax(col))
            assert np.all(np.diff(col[: peak + 1]) >= 0)
            assert np.all(np.diff(col[peak:]) <= 0)
            assert col[peak] == 1.0

    @pytest.mark.parametrize("frame,bands", list(zip(MEL_FRAME_SIZES, MEL_BANDS)))
    def test_loss_scales_cover_interior(self, frame, bands):
        w = build_mel_filterbank(frame // 2 + 1, bands, 16000).weights
        assert np.all(w[1:-1].sum(axis=1) > 0)

    def test_degenerate_bands_rejected(self):
        with pytest.raises(ValueError, match="degenerate"):
            build_mel_filterbank(17, 15, 16000)
        with pytest.raises(ValueError):
            build_mel_filterbank(10, 10, 16000)
        with pytest.raises(ValueError):
            build_mel_filterbank(64, 10, 16000, f_max=9000)

    def test_apply(self):
        fb = build_mel_filterbank(33, 10, 16000)
        rng = np.random.default_rng(8)
        mag = np.abs(rng.standard_normal((33, 6)))
        ref = np.array(oracles.naive_apply_mel(mag.tolist(), fb.weights.tolist()))
        np.testing.assert_allclose(apply_mel(mag, fb), ref, rtol=1e-12)
        assert not np.any(apply_mel(np.zeros((33, 2)), fb))
        one_hot = np.zeros((33, 1))
        one_hot[7] = 1.0
        np.testing.assert_array_equal(apply_mel(one_hot, fb)[:, 0], fb.weights[7])
        with pytest.raises(ValueError):
            apply_mel(np.zeros((30, 2)), fb)

    def test_csv_export(self, tmp_path):
        fb = build_mel_filterbank(33, 5, 16000)
        fb.to_csv(tmp_path / "fb.csv")
        back = np.loadtxt(tmp_path / "fb.csv", delimiter=",", skiprows=1)
        np.testing.assert_allclose(back, fb.weights)
