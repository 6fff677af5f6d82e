import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tmse.dsp import load_wav
from tmse.path import make_rng
from tmse.synth import CLEAN_PEAK, SynthSpec, dump_pairs, generate, harmonic_tone, mix_at_snr, pink_noise


def measured_snr(pair):
    return 10 * np.log10(np.sum(pair.clean.samples**2) / np.sum(pair.noise**2))


@pytest.fixture(scope="module")
def default_pairs():
    return generate(SynthSpec(n_utts=16, duration_s=0.5))


class TestGenerate:
    def test_snr_targeted(self, default_pairs):
        for p in default_pairs:
            assert abs(measured_snr(p) - p.snr_db) < 0.1
            assert 0.0 <= p.snr_db <= 10.0

    def test_zero_db_energy_ratio(self):
        for p in generate(SynthSpec(n_utts=5, duration_s=0.3, snr_db=(0.0, 0.0))):
            ratio = np.sum(p.clean.samples**2) / np.sum(p.noise**2)
            assert 10**-0.01 <= ratio <= 10**0.01

    def test_infinite_snr_is_clean(self):
        for p in generate(SynthSpec(n_utts=3, duration_s=0.2, snr_db=(math.inf, math.inf))):
            np.testing.assert_array_equal(p.noisy.samples, p.clean.samples)

    def test_bitwise_deterministic(self, default_pairs):
        again = generate(SynthSpec(n_utts=16, duration_s=0.5))
        for a, b in zip(default_pairs, again):
            assert a.clean.samples.tobytes() == b.clean.samples.tobytes()
            assert a.noisy.samples.tobytes() == b.noisy.samples.tobytes()

    def test_additivity_exact(self, default_pairs):
        for p in default_pairs:
            np.testing.assert_array_equal(p.noisy.samples - p.clean.samples, p.noise)

    def test_utterance_independent_of_count(self, default_pairs):
        fewer = generate(SynthSpec(n_utts=4, duration_s=0.5))
        for a, b in zip(fewer, default_pairs):
            assert a.noisy.samples.tobytes() == b.noisy.samples.tobytes()

    def test_seed_changes_data(self, default_pairs):
        other = generate(SynthSpec(n_utts=1, duration_s=0.5, seed=1))[0]
        assert not np.array_equal(other.clean.samples, default_pairs[0].clean.samples)

    def test_metadata(self, default_pairs):
        p = default_pairs[3]
        assert p.name == "utt0003" and p.clean.sample_rate == 16000 and p.clean.samples.size == 8000
        assert np.max(np.abs(p.clean.samples)) == pytest.approx(CLEAN_PEAK)

    def test_pink(self):
        for p in generate(SynthSpec(n_utts=3, duration_s=0.5, noise="pink")):
            assert abs(measured_snr(p) - p.snr_db) < 0.1

    @pytest.mark.parametrize(
        "kwargs", [{"n_utts": 0}, {"noise": "brown"}, {"snr_db": (5.0, 1.0)}, {"max_harmonics": 1}]
    )
    def test_invalid_spec(self, kwargs):
        with pytest.raises(ValueError):
            SynthSpec(**kwargs)


class TestComponents:
    def test_harmonic_spectrum(self):
        """Energy sits at multiples of one fundamental."""
        fs, n = 16000, 16000
        x = harmonic_tone(make_rng(0), n, fs)
        mag = np.abs(np.fft.rfft(x))
        peak = np.argmax(mag)
        f0_candidates = [peak / h for h in range(1, 6)]
        assert any(100 <= f <= 300 for f in f0_candidates)

    def test_pink_slope(self):
        n = 1 << 16
        x = pink_noise(make_rng(1), n)
        power = np.abs(np.fft.rfft(x)) ** 2
        lo = power[100:200].mean()
        hi = power[1600:3200].mean()
        slope_db_per_octave = 10 * np.log10(hi / lo) / np.log2(2400 / 150)
        assert slope_db_per_octave == pytest.approx(-3.0, abs=0.5)

    def test_mix_zero_noise_rejected(self):
        with pytest.raises(ValueError):
            mix_at_snr(np.ones(4), np.zeros(4), 0.0)


@settings(max_examples=30, deadline=None)
@given(snr=st.floats(-20, 40), seed=st.integers(0, 1000))
def test_mix_at_snr_property(snr, seed):
    rng = np.random.default_rng(seed)
    clean, noise = rng.standard_normal((2, 400))
    noisy = mix_at_snr(clean, noise, snr)
    assert 10 * np.log10(np.sum(clean**2) / np.sum((noisy - clean) ** 2)) == pytest.approx(snr, abs=1e-3)


def test_dump_round_trip(tmp_path):
    pairs = generate(SynthSpec(n_utts=2, duration_s=0.1))
    out = dump_pairs(pairs, tmp_path / "set")
    for p in pairs:
        clean = load_wav(out / "clean" / f"{p.name}.wav")
        noisy = load_wav(out / "noisy" / f"{p.name}.wav")
        assert clean.sample_rate == 16000
        np.testing.assert_array_equal(clean.samples, p.clean.samples.astype(np.float32))
        np.testing.assert_array_equal(noisy.samples, p.noisy.samples.astype(np.float32))
