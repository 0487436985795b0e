import numpy as np
import pytest

from snorebio.audio import AudioClip
from snorebio.dsp import (
    LEFT_CONTEXT,
    RIGHT_CONTEXT,
    FeatureMatrix,
    MfccConfig,
    extract_mfcc,
    frame_and_window,
    hanning_window,
    hz_to_mel,
    mel_filterbank,
    mel_to_hz,
    power_spectrum,
    select_observations,
    stack_context,
)
from snorebio.errors import BadSampleRateError, ClipTooShortError, EmptyFeatureMatrixError

from .oracles import oracle_mfcc

CFG = MfccConfig()


def _clip(samples):
    return AudioClip(samples=np.asarray(samples, dtype=np.float64), sample_rate_hz=16000)


class TestFraming:
    @pytest.mark.parametrize(
        "n_samples,expected",
        [(400, 1), (401, 1), (559, 1), (560, 2), (1600, 8), (16000, 98)],
    )
    def test_frame_count(self, n_samples, expected):
        frames = frame_and_window(_clip(np.ones(n_samples)), CFG)
        assert frames.shape == (expected, 400)

    def test_too_short(self):
        with pytest.raises(ClipTooShortError):
            frame_and_window(_clip(np.ones(399)), CFG)

    def test_rate_mismatch(self):
        clip = AudioClip(samples=np.ones(1000), sample_rate_hz=8000)
        with pytest.raises(BadSampleRateError):
            frame_and_window(clip, CFG)

    def test_hop_shift_moves_frames_by_one(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal(2000)
        a = frame_and_window(_clip(x), CFG)
        b = frame_and_window(_clip(x[160:]), CFG)
        np.testing.assert_array_equal(a[1:], b[: len(a) - 1])

    def test_window_applied(self):
        frames = frame_and_window(_clip(np.ones(400)), CFG)
        np.testing.assert_allclose(frames[0], hanning_window(400))


class TestWindow:
    def test_endpoints_zero_and_symmetric(self):
        w = hanning_window(400)
        assert w[0] == 0.0
        assert w[-1] == 0.0
        np.testing.assert_allclose(w, w[::-1], atol=1e-15)

    def test_midpoint_value(self):
        w = hanning_window(401)
        assert w[200] == pytest.approx(1.0)


class TestPowerSpectrum:
    def test_parseval_against_windowed_energy(self):
        # The full n_fft-point DFT obeys sum |X_k|^2 = n_fft * sum x^2;
        # reconstruct the full-spectrum sum from the half spectrum.
        rng = np.random.default_rng(1)
        frame = rng.standard_normal(400) * hanning_window(400)
        half = power_spectrum(frame, 512)
        full_sum = half[0] + half[-1] + 2.0 * np.sum(half[1:-1])
        assert full_sum == pytest.approx(512.0 * np.sum(frame**2), rel=1e-12)

    def test_pure_tone_lands_on_expected_bin(self):
        # 1 kHz at 16 kHz with n_fft 512 -> bin 32 exactly
        t = np.arange(400) / 16000.0
        frame = np.sin(2.0 * np.pi * 1000.0 * t) * hanning_window(400)
        spec = power_spectrum(frame, 512)
        assert np.argmax(spec) == 32

    def test_frame_longer_than_fft_rejected(self):
        with pytest.raises(ValueError):
            power_spectrum(np.ones(600), 512)

    def test_dc_frame(self):
        spec = power_spectrum(np.ones(400), 512)
        assert spec[0] == pytest.approx(400.0**2)


class TestMelFilterbank:
    def test_scale_roundtrip(self):
        f = np.array([0.0, 100.0, 1000.0, 8000.0])
        np.testing.assert_allclose(mel_to_hz(hz_to_mel(f)), f, rtol=1e-12)

    def test_htk_reference_point(self):
        assert hz_to_mel(1000.0) == pytest.approx(2595.0 * np.log10(1000.0 / 700.0 + 1.0))

    def test_shape_and_range(self):
        fbank = mel_filterbank(CFG)
        assert fbank.shape == (40, 257)
        assert np.all(fbank >= 0.0)
        assert np.all(fbank <= 1.0)

    def test_every_filter_nonempty_and_peak_near_one(self):
        fbank = mel_filterbank(CFG)
        assert np.all(fbank.sum(axis=1) > 0.0)
        # discrete grid does not always hit the analytic peak exactly
        assert np.all(fbank.max(axis=1) > 0.5)

    def test_filters_cover_band_without_gaps(self):
        fbank = mel_filterbank(CFG)
        coverage = fbank.sum(axis=0)
        corners = mel_to_hz(np.linspace(hz_to_mel(0.0), hz_to_mel(8000.0), 42))
        bin_hz = np.arange(257) * 16000 / 512
        inside = (bin_hz > corners[1]) & (bin_hz < corners[-2])
        assert np.all(coverage[inside] > 0.0)


class TestMfccOracle:
    def test_matches_brute_force_on_random_clips(self):
        rng = np.random.default_rng(7)
        for _ in range(5):
            samples = rng.uniform(-0.5, 0.5, size=1600)
            ours = extract_mfcc(_clip(samples), CFG).frames
            ref = oracle_mfcc(samples)
            assert ours.shape == ref.shape == (8, 25)
            np.testing.assert_allclose(ours, ref, rtol=1e-6, atol=1e-9)

    def test_matches_on_tonal_clip(self):
        t = np.arange(2000) / 16000.0
        samples = 0.3 * np.sin(2 * np.pi * 440 * t) + 0.1 * np.sin(2 * np.pi * 1970 * t)
        ours = extract_mfcc(_clip(samples), CFG).frames
        np.testing.assert_allclose(ours, oracle_mfcc(samples), rtol=1e-6, atol=1e-9)

    def test_silence_hits_log_floor(self):
        ours = extract_mfcc(_clip(np.zeros(800)), CFG).frames
        # all mel energies floored -> constant log vector -> energy in c0 only
        expected_c0 = np.sqrt(1.0 / 40.0) * 40.0 * np.log(1e-10)
        np.testing.assert_allclose(ours[:, 0], expected_c0, rtol=1e-12)
        np.testing.assert_allclose(ours[:, 1:], 0.0, atol=1e-12)

    def test_scale_shifts_c0_only(self):
        rng = np.random.default_rng(9)
        x = rng.uniform(-0.4, 0.4, 1600)
        a = extract_mfcc(_clip(x), CFG).frames
        b = extract_mfcc(_clip(0.5 * x), CFG).frames
        # power scales by 0.25 -> log drops by log(4) uniformly -> only c0 moves
        np.testing.assert_allclose(a[:, 1:], b[:, 1:], atol=1e-9)
        expected_drop = np.sqrt(1.0 / 40.0) * 40.0 * np.log(4.0)
        np.testing.assert_allclose(a[:, 0] - b[:, 0], expected_drop, rtol=1e-9)


class TestContextStacking:
    def _features(self, n=80, d=25, seed=3):
        rng = np.random.default_rng(seed)
        return FeatureMatrix(frames=rng.standard_normal((n, d)))

    def test_interior_center_is_straight_slice(self):
        feats = self._features()
        stacked = stack_context(feats, 30)
        expected = feats.frames[30 - LEFT_CONTEXT : 30 + RIGHT_CONTEXT + 1].ravel()
        np.testing.assert_array_equal(stacked.vector, expected)
        assert stacked.vector.shape == (1250,)
        assert stacked.center_frame == 30

    def test_left_edge_replicates_first_frame(self):
        feats = self._features()
        stacked = stack_context(feats, 0)
        first = feats.frames[0]
        for i in range(LEFT_CONTEXT + 1):
            np.testing.assert_array_equal(stacked.vector[i * 25 : (i + 1) * 25], first)

    def test_right_edge_replicates_last_frame(self):
        feats = self._features()
        stacked = stack_context(feats, 79)
        last = feats.frames[-1]
        np.testing.assert_array_equal(stacked.vector[-25:], last)

    def test_out_of_range_center(self):
        feats = self._features()
        with pytest.raises(IndexError):
            stack_context(feats, 80)

    def test_empty_features(self):
        empty = FeatureMatrix(frames=np.zeros((0, 25)))
        with pytest.raises(EmptyFeatureMatrixError):
            stack_context(empty, 0)


class TestObservationSelection:
    def test_long_utterance_uses_stride_five(self):
        feats = FeatureMatrix(frames=np.random.default_rng(0).standard_normal((98, 25)))
        obs = select_observations(feats)
        assert len(obs) == 15
        assert [o.center_frame for o in obs] == list(range(0, 75, 5))

    def test_short_utterance_clamps_to_last(self):
        feats = FeatureMatrix(frames=np.random.default_rng(0).standard_normal((12, 25)))
        obs = select_observations(feats)
        assert len(obs) == 15
        assert [o.center_frame for o in obs] == [0, 5, 10, 11, 11, 11, 11, 11, 11, 11, 11, 11, 11, 11, 11]

    def test_single_frame(self):
        feats = FeatureMatrix(frames=np.ones((1, 25)))
        obs = select_observations(feats)
        assert all(o.center_frame == 0 for o in obs)

    def test_empty(self):
        with pytest.raises(EmptyFeatureMatrixError):
            select_observations(FeatureMatrix(frames=np.zeros((0, 25))))


class TestConfig:
    def test_frame_sizes_at_16k(self):
        assert CFG.frame_len == 400
        assert CFG.frame_hop == 160

    def test_fingerprint_stable_and_sensitive(self):
        assert CFG.fingerprint() == MfccConfig().fingerprint()
        assert CFG.fingerprint() != MfccConfig(n_mels=39).fingerprint()
