"""MFCC front-end: framing, Hanning windowing, power spectra, mel filterbank,
cepstral coefficients, and temporal context stacking.

Pipeline conventions (pinned so an independent oracle can reproduce them):

* 25 ms frames, 10 ms hop (400 / 160 samples at 16 kHz); a frame must lie
  fully inside the signal, so T = floor((n_samples - 400) / 160) + 1.
* symmetric Hanning window w[n] = 0.5 * (1 - cos(2*pi*n / (N-1))).
* power spectrum = |DFT|^2 of the zero-padded windowed frame, bins
  0..n_fft/2, no 1/N scaling.
* 40 triangular mel filters between 0 Hz and 8 kHz on the HTK mel scale
  m = 2595 * log10(1 + f/700); triangles are linear in Hz between the
  mel-spaced corner frequencies, peak height 1 (no area normalization).
* natural log with the energies floored at log_floor, then an orthonormal
  DCT-II keeping coefficients c0..c24 (c0 included).
* no pre-emphasis, liftering, deltas, or cepstral mean normalization.

Context stacking takes 24 frames of left context, the center frame, and
25 frames of right context (50 x 25 = 1250 values); out-of-range frames
replicate the first/last frame.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.fft import dct

from .audio import AudioClip
from .errors import BadSampleRateError, ClipTooShortError, EmptyFeatureMatrixError

LEFT_CONTEXT = 24
RIGHT_CONTEXT = 25
CONTEXT_FRAMES = LEFT_CONTEXT + 1 + RIGHT_CONTEXT


@dataclass(frozen=True)
class MfccConfig:
    sample_rate_hz: int = 16000
    frame_len_s: float = 0.025
    frame_hop_s: float = 0.010
    n_fft: int = 512
    n_mels: int = 40
    n_coeffs: int = 25
    fmin_hz: float = 0.0
    fmax_hz: float = 8000.0
    log_floor: float = 1e-10

    @property
    def frame_len(self) -> int:
        return int(round(self.frame_len_s * self.sample_rate_hz))

    @property
    def frame_hop(self) -> int:
        return int(round(self.frame_hop_s * self.sample_rate_hz))

    def fingerprint(self) -> str:
        """Content hash used to guard against mixing feature configurations."""
        payload = json.dumps(asdict(self), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class FeatureMatrix:
    """Per-frame MFCC vectors (T x n_coeffs) for one utterance."""

    frames: np.ndarray
    frame_len_s: float = 0.025
    frame_hop_s: float = 0.010

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float64)
        if frames.ndim != 2:
            raise ValueError(f"frames must be 2-D (T x coeffs), got shape {frames.shape}")
        object.__setattr__(self, "frames", frames)

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]


@dataclass(frozen=True)
class StackedFeature:
    """Context-stacked network input: 50 consecutive frames flattened."""

    vector: np.ndarray
    center_frame: int

    def __post_init__(self):
        object.__setattr__(self, "vector", np.asarray(self.vector, dtype=np.float64))


def hanning_window(n: int) -> np.ndarray:
    k = np.arange(n)
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * k / (n - 1)))


def frame_and_window(clip: AudioClip, config: MfccConfig = MfccConfig()) -> np.ndarray:
    """Slice a clip into hop-spaced windowed frames (T x frame_len).

    Frame i covers samples [hop*i, hop*i + frame_len); only frames fully
    inside the signal are produced.
    """
    if clip.sample_rate_hz != config.sample_rate_hz:
        raise BadSampleRateError(
            f"clip rate {clip.sample_rate_hz} Hz != config rate {config.sample_rate_hz} Hz"
        )
    n_len, n_hop = config.frame_len, config.frame_hop
    n_samples = len(clip.samples)
    if n_samples < n_len:
        raise ClipTooShortError(f"clip has {n_samples} samples, need >= {n_len}")
    n_frames = (n_samples - n_len) // n_hop + 1
    idx = n_hop * np.arange(n_frames)[:, None] + np.arange(n_len)[None, :]
    return clip.samples[idx] * hanning_window(n_len)[None, :]


def power_spectrum(frame: np.ndarray, n_fft: int = 512) -> np.ndarray:
    """|DFT|^2 of a (windowed) frame for bins 0..n_fft/2, zero-padded to n_fft."""
    frame = np.asarray(frame, dtype=np.float64)
    if frame.shape[-1] > n_fft:
        raise ValueError(f"frame length {frame.shape[-1]} exceeds n_fft {n_fft}")
    spectrum = np.fft.rfft(frame, n=n_fft)
    return np.abs(spectrum) ** 2


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(config: MfccConfig = MfccConfig()) -> np.ndarray:
    """Triangular filter matrix (n_mels x (n_fft/2 + 1)), peak height 1."""
    corners_hz = mel_to_hz(
        np.linspace(hz_to_mel(config.fmin_hz), hz_to_mel(config.fmax_hz), config.n_mels + 2)
    )
    bin_hz = np.arange(config.n_fft // 2 + 1) * config.sample_rate_hz / config.n_fft
    lower, center, upper = corners_hz[:-2, None], corners_hz[1:-1, None], corners_hz[2:, None]
    up = (bin_hz[None, :] - lower) / (center - lower)
    down = (upper - bin_hz[None, :]) / (upper - center)
    return np.maximum(0.0, np.minimum(up, down))


def extract_mfcc(clip: AudioClip, config: MfccConfig = MfccConfig()) -> FeatureMatrix:
    """MFCC matrix of a clip: T frames x n_coeffs coefficients (c0 included)."""
    frames = frame_and_window(clip, config)
    pspec = power_spectrum(frames, config.n_fft)
    energies = pspec @ mel_filterbank(config).T
    log_energies = np.log(np.maximum(energies, config.log_floor))
    coeffs = dct(log_energies, type=2, norm="ortho", axis=1)[:, : config.n_coeffs]
    return FeatureMatrix(
        frames=coeffs, frame_len_s=config.frame_len_s, frame_hop_s=config.frame_hop_s
    )


def stack_context(features: FeatureMatrix, center: int) -> StackedFeature:
    """Flatten frames [center-24, center+25] in temporal order, edge-replicated."""
    n = features.n_frames
    if n == 0:
        raise EmptyFeatureMatrixError("cannot stack context of an empty feature matrix")
    if not 0 <= center < n:
        raise IndexError(f"center frame {center} out of range [0, {n})")
    idx = np.clip(np.arange(center - LEFT_CONTEXT, center + RIGHT_CONTEXT + 1), 0, n - 1)
    return StackedFeature(vector=features.frames[idx].ravel(), center_frame=center)


def select_observations(
    features: FeatureMatrix, count: int = 15, stride: int = 5
) -> list[StackedFeature]:
    """Stacked features at centers 0, stride, 2*stride, ... clamped to the last frame.

    Always returns exactly `count` observations; on short utterances the
    clamping repeats the final center.
    """
    n = features.n_frames
    if n == 0:
        raise EmptyFeatureMatrixError("cannot select observations from an empty feature matrix")
    centers = np.minimum(stride * np.arange(count), n - 1)
    return [stack_context(features, int(c)) for c in centers]


def write_features_csv(features: FeatureMatrix, path) -> None:
    """One row per frame, one column per coefficient, 9 significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = ",".join(f"c{i}" for i in range(features.frames.shape[1]))
    np.savetxt(path, features.frames, fmt="%.9g", delimiter=",", header=header, comments="")


def write_power_spectrogram_csv(clip: AudioClip, config: MfccConfig, path) -> None:
    """Per-frame power spectra as CSV (T rows x n_fft/2+1 bins), 9 significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pspec = power_spectrum(frame_and_window(clip, config), config.n_fft)
    header = ",".join(f"bin{i}" for i in range(pspec.shape[1]))
    np.savetxt(path, pspec, fmt="%.9g", delimiter=",", header=header, comments="")
