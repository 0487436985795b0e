"""Audio clip container and 16-bit PCM WAV I/O.

Only RIFF PCM, 16-bit signed little-endian, mono is supported; anything
else is rejected with UnsupportedWavError. Samples are exchanged as
float64 in [-1, 1] (int16 / 32768 on read, round(x * 32768) clamped to
the int16 range on write).
"""

from __future__ import annotations

import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import BadSampleRateError, MissingFileError, UnsupportedWavError

# One shared scale keeps read(write(x)) exact for representable values,
# so re-encoding a file reproduces it byte for byte.
INT16_SCALE = 32768.0


@dataclass(frozen=True)
class AudioClip:
    """Mono PCM sample sequence with its sample rate."""

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        if self.sample_rate_hz <= 0:
            raise BadSampleRateError(f"sample rate must be positive, got {self.sample_rate_hz}")
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError(f"samples must be 1-D, got shape {samples.shape}")
        object.__setattr__(self, "samples", samples)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz


def read_wav(path, expected_rate_hz: int | None = None) -> AudioClip:
    """Read a mono 16-bit PCM WAV file.

    If expected_rate_hz is given, a mismatching file rate raises
    BadSampleRateError instead of silently resampling (resampling is out
    of scope; inputs must already match).
    """
    path = Path(path)
    if not path.exists():
        raise MissingFileError(f"no such audio file: {path}")
    try:
        with wave.open(str(path), "rb") as wf:
            n_channels = wf.getnchannels()
            sampwidth = wf.getsampwidth()
            rate = wf.getframerate()
            n_frames = wf.getnframes()
            raw = wf.readframes(n_frames)
    except wave.Error as exc:
        raise UnsupportedWavError(f"{path}: not a readable PCM WAV file ({exc})") from exc
    if n_channels != 1:
        raise UnsupportedWavError(f"{path}: expected mono, got {n_channels} channels")
    if sampwidth != 2:
        raise UnsupportedWavError(f"{path}: expected 16-bit samples, got {8 * sampwidth}-bit")
    if expected_rate_hz is not None and rate != expected_rate_hz:
        raise BadSampleRateError(f"{path}: file rate {rate} Hz != expected {expected_rate_hz} Hz")
    ints = np.frombuffer(raw, dtype="<i2")
    return AudioClip(samples=ints.astype(np.float64) / INT16_SCALE, sample_rate_hz=rate)


def write_wav(path, clip: AudioClip) -> None:
    """Write a clip as mono 16-bit PCM WAV (values clipped to [-1, 1])."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    clipped = np.clip(clip.samples, -1.0, 1.0)
    ints = np.clip(np.round(clipped * INT16_SCALE), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(clip.sample_rate_hz)
        wf.writeframes(ints.tobytes())
