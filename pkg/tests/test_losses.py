import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tmse.dsp import Waveform
from tmse.losses import (
    CompositeWeights,
    MelLossConfig,
    composite_loss,
    fm_loss,
    multiscale_mel_loss,
    si_sdr,
    sisdr_loss,
    snr,
    tm_loss,
)

from . import oracles


class TestMse:
    @pytest.mark.parametrize("loss", [tm_loss, fm_loss])
    def test_cases(self, loss):
        rng = np.random.default_rng(0)
        a, b = rng.standard_normal((2, 2, 5, 7))
        assert loss(a, a) == 0.0
        assert loss(a + 0.3, a) == pytest.approx(0.09)
        assert loss(a, b) == pytest.approx(oracles.mean_sq_diff(a.ravel(), b.ravel()), rel=1e-12)
        assert loss(a, b) == loss(b, a)

    def test_complex(self):
        a = np.array([1 + 1j, 2.0])
        assert tm_loss(a, a + (3 + 4j)) == pytest.approx(25.0)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            tm_loss(np.zeros(3), np.zeros(4))


class TestSiSdr:
    def test_identity_cap(self):
        x = np.random.default_rng(1).standard_normal(1000)
        assert si_sdr(x, x) == 60.0
        assert sisdr_loss(x, x) == -60.0

    def test_scale_invariance_exact(self):
        rng = np.random.default_rng(2)
        ref = rng.standard_normal(500)
        est = ref + 0.5 * rng.standard_normal(500)
        base = si_sdr(est, ref)
        for a in (0.5, 2.0, 7.3, 1e-3):
            assert si_sdr(a * est, ref) == pytest.approx(base, abs=1e-10)

    def test_orthogonal_zero_db(self):
        assert abs(si_sdr(np.array([1.0, 1.0]), np.array([1.0, 0.0]))) < 0.01
        rng = np.random.default_rng(3)
        ref = rng.standard_normal(4000)
        n = rng.standard_normal(4000)
        n -= np.dot(n, ref) / np.dot(ref, ref) * ref
        n *= np.linalg.norm(ref) / np.linalg.norm(n)
        assert abs(si_sdr(ref + n, ref)) < 0.01

    def test_matches_high_precision(self):
        rng = np.random.default_rng(4)
        ref = rng.standard_normal(300)
        est = rng.standard_normal(300) + ref
        assert si_sdr(est, ref) == pytest.approx(oracles.si_sdr(est, ref), abs=1e-9)

    def test_zero_reference(self):
        with pytest.raises(ValueError):
            si_sdr(np.ones(3), np.zeros(3))

    def test_snr(self):
        ref = np.array([1.0, 0.0])
        assert snr(ref, ref) == 60.0
        assert snr(np.array([1.0, 1.0]), ref) == pytest.approx(0.0)


def manual_mel_loss(x, y, frame, bands, fs):
    window = oracles.periodic_hann(frame)
    fb = oracles.triangle_filterbank(frame // 2 + 1, bands, fs)
    mx = oracles.naive_apply_mel([[abs(v) for v in row] for row in oracles.naive_stft(x, window, frame // 4)], fb)
    my = oracles.naive_apply_mel([[abs(v) for v in row] for row in oracles.naive_stft(y, window, frame // 4)], fb)
    diffs = [abs(a - b) for ra, rb in zip(mx, my) for a, b in zip(ra, rb)]
    return sum(diffs) / len(diffs)


class TestMelLoss:
    def test_zero_on_identical(self):
        x = np.random.default_rng(5).standard_normal(4000)
        assert multiscale_mel_loss(x, x) == 0.0

    def test_sign_flip(self):
        rng = np.random.default_rng(6)
        x, y = rng.standard_normal((2, 3000))
        assert multiscale_mel_loss(-x, -y) == pytest.approx(multiscale_mel_loss(x, y), rel=1e-12)

    def test_manual_single_scale(self):
        cfg = MelLossConfig((32,), (5,))
        rng = np.random.default_rng(7)
        x, y = rng.standard_normal((2, 12))  # 12 // 8 + 1 = 2 frames
        expected = manual_mel_loss(x, y, 32, 5, 16000)
        assert multiscale_mel_loss(x, y, cfg, sample_rate=16000) == pytest.approx(expected, rel=1e-9)

    def test_monotone_in_gain(self):
        x = np.random.default_rng(8).standard_normal(4000)
        values = [multiscale_mel_loss(g * x, x) for g in (1.0, 1.2, 1.5, 2.0, 3.0)]
        assert values[0] == 0 and np.all(np.diff(values) > 0)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            multiscale_mel_loss(np.zeros(100), np.zeros(101))

    def test_waveform_inputs(self):
        x = np.random.default_rng(9).standard_normal(2000)
        a = multiscale_mel_loss(Waveform(x, 8000), Waveform(0.5 * x, 8000))
        b = multiscale_mel_loss(x, 0.5 * x, sample_rate=8000)
        assert a == b
        with pytest.raises(ValueError):
            multiscale_mel_loss(Waveform(x, 8000), Waveform(x, 16000))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            MelLossConfig((32, 64), (5,))
        with pytest.raises(ValueError):
            MelLossConfig((32,), (17,))


class TestComposite:
    def setup_method(self):
        rng = np.random.default_rng(10)
        self.spec0 = rng.standard_normal((2, 8, 8))
        self.spec1 = self.spec0 + 0.1 * rng.standard_normal((2, 8, 8))
        self.wav = rng.standard_normal(3000)
        self.wav_hat = self.wav + 0.2 * rng.standard_normal(3000)

    def test_defaults(self):
        assert CompositeWeights() == CompositeWeights(0.1, 0.01)

    def test_weights_zero(self):
        out = composite_loss(self.spec1, self.spec0, self.wav_hat, self.wav, CompositeWeights(0, 0))
        assert out.total == tm_loss(self.spec1, self.spec0)

    def test_perfect(self):
        out = composite_loss(self.spec0, self.spec0, self.wav, self.wav)
        assert out.tm == 0 and out.mel == 0
        assert out.total == pytest.approx(0.01 * -60.0)

    def test_breakdown_sums(self):
        out = composite_loss(self.spec1, self.spec0, self.wav_hat, self.wav)
        assert out.total == pytest.approx(out.tm + 0.1 * out.mel + 0.01 * out.sisnr)

    def test_negative_weight(self):
        with pytest.raises(ValueError):
            CompositeWeights(-1.0, 0.0)


@settings(max_examples=25, deadline=None)
@given(a=st.floats(1e-3, 1e3), seed=st.integers(0, 10_000))
def test_si_sdr_scale_invariance_property(a, seed):
    rng = np.random.default_rng(seed)
    ref = rng.standard_normal(64)
    est = ref + rng.standard_normal(64)
    assert si_sdr(a * est, ref) == pytest.approx(si_sdr(est, ref), abs=1e-9)
