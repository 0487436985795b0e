"""Corpus manifests, enrollment/test splitting, and a synthetic test corpus.

A manifest is a CSV file with one row per utterance::

    #sample_rate_hz=16000
    subject_id,utterance_index,audio_path,duration_s
    s00,0,s00/u0.wav,2.000000
    ...

The first line is a sidecar config line carrying the corpus sample rate;
audio paths are relative to the manifest's directory. The split follows
the four-enrollment / one-test protocol: subjects contributing at least
five utterances are eligible, their first four utterances (ascending
utterance_index) enroll them and the fifth is held out for testing. The
development pool takes up to the first four utterances of *every*
subject and never contains a held-out test utterance.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from .audio import AudioClip, write_wav
from .errors import (
    BadSampleRateError,
    DuplicateUtteranceError,
    ManifestParseError,
    MissingFileError,
    NoEligibleSubjectsError,
)

MANIFEST_HEADER = ["subject_id", "utterance_index", "audio_path", "duration_s"]
_RATE_PREFIX = "#sample_rate_hz="


@dataclass(frozen=True)
class UtteranceRecord:
    """One snore utterance: who produced it, its ordinal, and where the audio lives."""

    subject_id: str
    utterance_index: int
    audio_path: Path
    duration_s: float

    def __post_init__(self):
        if not self.subject_id:
            raise ManifestParseError("subject_id must be non-empty")
        if self.utterance_index < 0:
            raise ManifestParseError(f"utterance_index must be >= 0, got {self.utterance_index}")
        if not self.duration_s > 0:
            raise ManifestParseError(f"duration_s must be > 0, got {self.duration_s}")
        object.__setattr__(self, "audio_path", Path(self.audio_path))


@dataclass(frozen=True)
class DatasetManifest:
    """Validated list of utterance records plus the corpus-wide sample rate."""

    records: tuple[UtteranceRecord, ...]
    sample_rate_hz: int

    def __post_init__(self):
        if self.sample_rate_hz <= 0:
            raise BadSampleRateError(f"sample rate must be positive, got {self.sample_rate_hz}")
        records = tuple(self.records)
        if not records:
            raise ManifestParseError("manifest contains no records")
        seen = set()
        for rec in records:
            key = (rec.subject_id, rec.utterance_index)
            if key in seen:
                raise DuplicateUtteranceError(f"duplicate (subject, index) pair: {key}")
            seen.add(key)
        object.__setattr__(self, "records", records)

    def subjects(self) -> list[str]:
        return sorted({rec.subject_id for rec in self.records})

    def by_subject(self) -> dict[str, list[UtteranceRecord]]:
        """Records grouped per subject, each group sorted by utterance_index."""
        groups: dict[str, list[UtteranceRecord]] = {}
        for rec in self.records:
            groups.setdefault(rec.subject_id, []).append(rec)
        for recs in groups.values():
            recs.sort(key=lambda r: r.utterance_index)
        return groups


@dataclass(frozen=True)
class SplitPlan:
    """Enroll/test/development assignment derived from a manifest.

    enroll and test cover only eligible subjects; development covers every
    subject in the manifest (at most four utterances each, never a test
    utterance).
    """

    eligible_subjects: tuple[str, ...]
    enroll: dict[str, list[UtteranceRecord]]
    test: dict[str, UtteranceRecord]
    development: dict[str, list[UtteranceRecord]]


def load_manifest(path) -> DatasetManifest:
    """Load and validate a manifest CSV; audio paths are resolved against it."""
    path = Path(path)
    if not path.exists():
        raise MissingFileError(f"no such manifest: {path}")
    base = path.parent
    with path.open("r", encoding="utf-8", newline="") as fh:
        first = fh.readline().strip()
        if not first.startswith(_RATE_PREFIX):
            raise ManifestParseError(f"{path}: first line must be '{_RATE_PREFIX}<rate>', got {first!r}")
        try:
            sample_rate_hz = int(first[len(_RATE_PREFIX):])
        except ValueError as exc:
            raise ManifestParseError(f"{path}: unparseable sample rate in {first!r}") from exc
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or list(reader.fieldnames) != MANIFEST_HEADER:
            raise ManifestParseError(
                f"{path}: header must be {','.join(MANIFEST_HEADER)}, got {reader.fieldnames}"
            )
        records = []
        for line_no, row in enumerate(reader, start=3):
            try:
                records.append(
                    UtteranceRecord(
                        subject_id=row["subject_id"],
                        utterance_index=int(row["utterance_index"]),
                        audio_path=base / row["audio_path"],
                        duration_s=float(row["duration_s"]),
                    )
                )
            except (TypeError, ValueError, KeyError) as exc:
                if isinstance(exc, ManifestParseError):
                    raise
                raise ManifestParseError(f"{path}:{line_no}: bad row {row!r}") from exc
    return DatasetManifest(records=tuple(records), sample_rate_hz=sample_rate_hz)


def write_manifest(manifest: DatasetManifest, path) -> None:
    """Write a manifest CSV with audio paths relative to its location."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    base = path.parent.resolve()
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write(f"{_RATE_PREFIX}{manifest.sample_rate_hz}\n")
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_HEADER)
        for rec in manifest.records:
            # relative record paths are cwd-relative; canonicalize before
            # rebasing so the stored path is always manifest-relative
            audio = Path(rec.audio_path).resolve()
            try:
                audio = audio.relative_to(base)
            except ValueError:
                pass  # outside the manifest tree: keep absolute
            writer.writerow(
                [rec.subject_id, rec.utterance_index, audio.as_posix(), f"{rec.duration_s:.6f}"]
            )


def make_split(manifest: DatasetManifest, min_utterances: int = 5) -> SplitPlan:
    """Derive the enroll/test/development split from a manifest.

    Subjects with at least min_utterances records are eligible; their
    first min_utterances - 1 records (capped at four) enroll them and the
    next one is the held-out test. At the default min_utterances=5 this
    is exactly the four-train / one-test protocol. The development pool
    takes the first four utterances of subjects with more than four, or
    all of them otherwise, minus any held-out test utterance.

    Deterministic: a pure function of the manifest, no randomness.
    """
    if min_utterances < 2:
        raise ValueError(f"min_utterances must be >= 2, got {min_utterances}")
    groups = manifest.by_subject()
    n_enroll = min(min_utterances - 1, 4)
    eligible = sorted(s for s, recs in groups.items() if len(recs) >= min_utterances)
    if not eligible:
        raise NoEligibleSubjectsError(
            f"no subject has >= {min_utterances} utterances (max found: "
            f"{max(len(r) for r in groups.values())})"
        )
    enroll = {s: groups[s][:n_enroll] for s in eligible}
    test = {s: groups[s][n_enroll] for s in eligible}
    development = {}
    for subject, recs in groups.items():
        dev = recs[:4] if len(recs) > 4 else list(recs)
        held_out = test.get(subject)
        development[subject] = [r for r in dev if r is not held_out]
    return SplitPlan(
        eligible_subjects=tuple(eligible), enroll=enroll, test=test, development=development
    )


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of the synthetic snore corpus.

    Each synthetic subject gets a stable spectral signature: n_resonances
    resonant peaks at subject-deterministic center frequencies (one per
    geometric band of freq_low_hz..freq_high_hz), excited by white noise.
    Per utterance the peak frequencies jitter by +-jitter and broadband
    white noise is added at snr_db.

    Within an utterance the signal is non-stationary, like a real snore:
    a slow breathing-style amplitude envelope (am_depth, rate drawn from
    am_rate_hz) plus independent slow drift of the per-peak weights
    (weight_mod_depth). This spreads each subject's frames over a range
    of loudness/balance states that all subjects share, which is what
    lets a pooled background model learn components spanning several
    subjects. The parameters are exposed so tests can tighten or loosen
    class separability.
    """

    n_subjects: int
    utterances_per_subject: int
    duration_s: float = 3.0
    seed: int = 0
    sample_rate_hz: int = 16000
    n_resonances: int = 3
    freq_low_hz: float = 80.0
    freq_high_hz: float = 2000.0
    jitter: float = 0.03
    snr_db: float = 20.0
    bandwidth_hz: float = 100.0
    resonance_weights: tuple[float, ...] = (1.0, 0.8, 0.6)
    # Per-subject fixed factor on each peak's weight, drawn from
    # [1 - weight_spread, 1]; a second identity axis besides frequency.
    weight_spread: float = 0.6
    am_depth: float = 0.9
    am_rate_hz: tuple[float, float] = (1.5, 4.0)
    weight_mod_depth: float = 0.3

    def __post_init__(self):
        if self.n_subjects < 2:
            raise ValueError(f"n_subjects must be >= 2, got {self.n_subjects}")
        if self.utterances_per_subject < 5:
            raise ValueError(
                f"utterances_per_subject must be >= 5, got {self.utterances_per_subject}"
            )
        if not self.duration_s > 0:
            raise ValueError(f"duration_s must be > 0, got {self.duration_s}")
        if len(self.resonance_weights) < self.n_resonances:
            raise ValueError("need one resonance weight per resonance")
        if not 0.0 <= self.am_depth < 1.0:
            raise ValueError(f"am_depth must be in [0, 1), got {self.am_depth}")
        if not 0.0 <= self.weight_mod_depth < 1.0:
            raise ValueError(f"weight_mod_depth must be in [0, 1), got {self.weight_mod_depth}")
        if not 0.0 <= self.weight_spread < 1.0:
            raise ValueError(f"weight_spread must be in [0, 1), got {self.weight_spread}")


def subject_signature(spec: SyntheticSpec, subject_index: int) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic per-subject identity: resonance centers and peak weights.

    Centers land one per geometric band of freq_low_hz..freq_high_hz;
    weights are the base resonance_weights scaled by per-subject factors
    in [1 - weight_spread, 1]. Both depend only on (seed, subject_index).
    """
    edges = np.geomspace(spec.freq_low_hz, spec.freq_high_hz, spec.n_resonances + 1)
    rng = np.random.default_rng([spec.seed, subject_index])
    # Stay off the band edges so neighbouring subjects rarely collide.
    u = rng.uniform(0.15, 0.85, size=spec.n_resonances)
    centers = edges[:-1] * (edges[1:] / edges[:-1]) ** u
    factors = rng.uniform(1.0 - spec.weight_spread, 1.0, size=spec.n_resonances)
    weights = np.asarray(spec.resonance_weights[: spec.n_resonances]) * factors
    return centers, weights


def subject_center_frequencies(spec: SyntheticSpec, subject_index: int) -> np.ndarray:
    """Deterministic per-subject resonance centers, one per geometric band."""
    return subject_signature(spec, subject_index)[0]


def _resonator_output(excitation: np.ndarray, freq_hz: float, spec: SyntheticSpec) -> np.ndarray:
    # Two-pole resonator: pole radius from the target -3 dB bandwidth.
    r = np.exp(-np.pi * spec.bandwidth_hz / spec.sample_rate_hz)
    omega = 2.0 * np.pi * freq_hz / spec.sample_rate_hz
    b = [1.0 - r]
    a = [1.0, -2.0 * r * np.cos(omega), r * r]
    return lfilter(b, a, excitation)


def synthesize_utterance(spec: SyntheticSpec, subject_index: int, utterance_index: int) -> AudioClip:
    """Render one utterance of a synthetic subject's signature (pure in its arguments)."""
    rng = np.random.default_rng([spec.seed, subject_index, utterance_index])
    n = int(round(spec.duration_s * spec.sample_rate_hz))
    t = np.arange(n) / spec.sample_rate_hz
    centers, base_weights = subject_signature(spec, subject_index)
    jittered = centers * (1.0 + rng.uniform(-spec.jitter, spec.jitter, size=len(centers)))
    excitation = rng.standard_normal(n)
    colored = np.zeros(n)
    for freq, weight in zip(jittered, base_weights):
        band = _resonator_output(excitation, freq, spec)
        band /= np.sqrt(np.mean(band**2))
        if spec.weight_mod_depth > 0.0:
            drift_rate = rng.uniform(0.5, 2.0)
            drift_phase = rng.uniform(0.0, 2.0 * np.pi)
            weight = weight * (
                1.0 + spec.weight_mod_depth * np.sin(2.0 * np.pi * drift_rate * t + drift_phase)
            )
        colored += weight * band
    if spec.am_depth > 0.0:
        am_rate = rng.uniform(*spec.am_rate_hz)
        am_phase = rng.uniform(0.0, 2.0 * np.pi)
        colored = colored * (1.0 + spec.am_depth * np.sin(2.0 * np.pi * am_rate * t + am_phase))
    colored /= np.sqrt(np.mean(colored**2))
    noise = rng.standard_normal(n) * 10.0 ** (-spec.snr_db / 20.0)
    mix = colored + noise
    mix *= 0.5 / np.max(np.abs(mix))
    return AudioClip(samples=mix, sample_rate_hz=spec.sample_rate_hz)


def generate_synthetic_corpus(spec: SyntheticSpec, out_dir) -> DatasetManifest:
    """Write the synthetic corpus WAVs plus manifest.csv under out_dir.

    Identical (spec, seed) produces byte-identical audio files.
    """
    out_dir = Path(out_dir)
    width = max(2, len(str(spec.n_subjects - 1)))
    records = []
    for si in range(spec.n_subjects):
        subject_id = f"s{si:0{width}d}"
        for ui in range(spec.utterances_per_subject):
            clip = synthesize_utterance(spec, si, ui)
            rel = Path(subject_id) / f"u{ui}.wav"
            write_wav(out_dir / rel, clip)
            records.append(
                UtteranceRecord(
                    subject_id=subject_id,
                    utterance_index=ui,
                    audio_path=out_dir / rel,
                    duration_s=clip.duration_s,
                )
            )
    manifest = DatasetManifest(records=tuple(records), sample_rate_hz=spec.sample_rate_hz)
    write_manifest(manifest, out_dir / "manifest.csv")
    return manifest
