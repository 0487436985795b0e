"""Shared fixtures: one small synthetic corpus with cached features."""

from __future__ import annotations

import numpy as np
import pytest

from snorebio import (
    MfccConfig,
    SyntheticSpec,
    extract_mfcc,
    generate_synthetic_corpus,
    make_split,
    read_wav,
)


@pytest.fixture(scope="session")
def mfcc_config():
    return MfccConfig()


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    """6 subjects x 5 short utterances, separable, fast to synthesize."""
    spec = SyntheticSpec(n_subjects=6, utterances_per_subject=5, duration_s=1.0, seed=5)
    out = tmp_path_factory.mktemp("corpus")
    manifest = generate_synthetic_corpus(spec, out)
    return spec, manifest, out


@pytest.fixture(scope="session")
def small_split(small_corpus):
    _, manifest, _ = small_corpus
    return make_split(manifest)


@pytest.fixture(scope="session")
def feature_cache(small_corpus, mfcc_config):
    _, manifest, _ = small_corpus
    cache = {}
    for rec in manifest.records:
        clip = read_wav(rec.audio_path, expected_rate_hz=manifest.sample_rate_hz)
        cache[(rec.subject_id, rec.utterance_index)] = extract_mfcc(clip, mfcc_config)
    return cache


@pytest.fixture(scope="session")
def stacked_rows(feature_cache):
    def rows(records):
        return np.vstack([feature_cache[(r.subject_id, r.utterance_index)].frames for r in records])

    return rows
