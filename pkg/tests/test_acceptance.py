"""Release acceptance gate.

One test per release criterion, each printing a single PASS/FAIL line
(SKIP for the conditional restricted-corpus check) so the gate status is
readable straight off the pytest output. Everything except criterion 10
runs on synthetic data and independent oracles.
"""

import os
import time
from io import StringIO
from itertools import permutations
from pathlib import Path

import numpy as np
import pytest

from snorebio.audio import AudioClip
from snorebio.dataset import SyntheticSpec, generate_synthetic_corpus
from snorebio.dsp import FeatureMatrix, MfccConfig, extract_mfcc
from snorebio.embedder import (
    TrainConfig,
    init_network,
    loss_and_grads,
    subject_embedding,
    utterance_embedding,
)
from snorebio.gmm import GmmFitConfig, GmmModel, fit_gmm
from snorebio.pipeline import RunConfig, run_enroll, run_evaluate, run_synth, run_train
from snorebio.recognizer import roc_and_eer
from snorebio.ubm import MapConfig, fit_ubm, map_adapt

from .oracles import numerical_gradients, oracle_mfcc, oracle_roc_eer


def _verdict(capsys, label: str, passed: bool) -> None:
    with capsys.disabled():
        print(f"[acceptance] {label:<50} {'PASS' if passed else 'FAIL'}")


def _skip(capsys, label: str, reason: str):
    with capsys.disabled():
        print(f"[acceptance] {label:<50} SKIP ({reason})")
    pytest.skip(reason)


def test_01_mfcc_matches_brute_force_transform_oracle(capsys):
    label = "1  mfcc front-end vs brute-force transform oracle"
    config = MfccConfig()
    start = time.perf_counter()
    agree = True
    for seed in range(100):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(480, 2000))
        samples = np.clip(0.2 * rng.standard_normal(n), -1.0, 1.0)
        ours = extract_mfcc(AudioClip(samples=samples, sample_rate_hz=16000), config).frames
        agree = agree and np.allclose(ours, oracle_mfcc(samples), rtol=1e-6, atol=1e-9)
    elapsed = time.perf_counter() - start
    _verdict(capsys, label, agree and elapsed < 30.0)
    assert agree, "front-end disagrees with the brute-force oracle beyond 1e-6 relative"
    assert elapsed < 30.0, f"100-clip oracle comparison took {elapsed:.1f} s (budget 30 s)"


def test_02_em_log_likelihood_never_decreases(capsys):
    label = "2  em mean log-likelihood monotonicity"
    worst = np.inf
    for run in range(50):
        k = (1, 5, 10, 25)[run % 4]
        rng = np.random.default_rng(run)
        centers = rng.uniform(-3.0, 3.0, size=(4, 3))
        frames = np.vstack([c + rng.standard_normal((100, 3)) for c in centers])
        model = fit_gmm(frames, GmmFitConfig(n_components=k, seed=run))
        trace = np.asarray(model.meta["log_likelihood_trace"])
        if len(trace) > 1:
            worst = min(worst, float(np.diff(trace).min()))
    _verdict(capsys, label, worst >= -1e-9)
    assert worst >= -1e-9, f"log-likelihood dropped by {-worst:.3e} during EM"


def test_03_well_separated_mixture_recovery(capsys):
    label = "3  3-component recovery at 5-sigma separation"
    sigma = 0.2
    centers = 5.0 * sigma * np.array([[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3.0) / 2.0]])
    successes = 0
    for run in range(100):
        rng = np.random.default_rng(run)
        frames = np.vstack([c + sigma * rng.standard_normal((200, 2)) for c in centers])
        model = fit_gmm(frames, GmmFitConfig(n_components=3, seed=run))
        best = min(
            np.linalg.norm(model.means[list(perm)] - centers, axis=1).max()
            for perm in permutations(range(3))
        )
        successes += best < 0.05
    _verdict(capsys, label, successes >= 95)
    assert successes >= 95, f"means recovered within 0.05 in only {successes}/100 runs"


def test_04_map_adaptation_closed_forms(capsys):
    label = "4  map adaptation closed forms"
    failures = []
    for seed in range(5):
        rng = np.random.default_rng(seed)
        mu = rng.standard_normal(4)
        ubm = GmmModel(
            weights=np.array([1.0]), means=mu[None, :], variances=np.ones((1, 4))
        )
        n = int(rng.integers(10, 80))
        frames = rng.standard_normal((n, 4)) + 1.0
        adapted = map_adapt(ubm, frames, MapConfig(relevance_factor=16.0))
        expected = (n * frames.mean(axis=0) + 16.0 * mu) / (n + 16.0)
        if not np.allclose(adapted.means[0], expected, rtol=1e-9, atol=1e-12):
            failures.append(f"single-component closed form off at seed {seed}")
    rng = np.random.default_rng(99)
    ubm = fit_ubm(rng.standard_normal((400, 3)), GmmFitConfig(n_components=4, seed=0))
    pinned = map_adapt(
        ubm, rng.standard_normal((60, 3)) + 2.0, MapConfig(relevance_factor=1e12)
    )
    if not np.allclose(pinned.means, ubm.means, atol=1e-6):
        failures.append("relevance factor 1e12 does not reproduce the background means")
    _verdict(capsys, label, not failures)
    assert not failures, "; ".join(failures)


def test_05_backprop_matches_finite_differences(capsys):
    label = "5  backprop vs central finite differences"
    rng = np.random.default_rng(0)
    config = TrainConfig(hidden_layers=2, hidden_units=5, dropout_rate=0.0)
    net = init_network(6, ("a", "b", "c"), config, rng)
    x = rng.standard_normal((4, 6))
    targets = np.zeros((4, 3))
    targets[np.arange(4), rng.integers(0, 3, 4)] = 1.0
    _, grad_w, grad_b = loss_and_grads(net, x, targets)
    numeric = numerical_gradients(
        lambda: loss_and_grads(net, x, targets)[0], net.weights + net.biases
    )
    passed = all(
        np.allclose(analytic, ref, rtol=1e-4, atol=1e-7)
        for analytic, ref in zip(grad_w + grad_b, numeric)
    )
    _verdict(capsys, label, passed)
    assert passed, "analytic gradients disagree with finite differences beyond 1e-4"


def test_06_embedding_norms_and_observation_oracle(capsys):
    label = "6  embedding unit norms and observation oracle"
    rng = np.random.default_rng(1)
    net = init_network(50 * 25, ("a", "b"), TrainConfig(hidden_layers=2, hidden_units=8), rng)
    failures = []
    utterances = []
    for i in range(4):
        features = FeatureMatrix(frames=rng.standard_normal((60, 25)))
        emb = utterance_embedding(net, features)
        utterances.append(emb)
        if abs(np.linalg.norm(emb.vector) - 1.0) > 1e-9:
            failures.append(f"utterance {i} embedding not unit norm")
        acc = np.zeros(8)
        for k in range(15):
            center = min(5 * k, features.n_frames - 1)
            idx = np.clip(np.arange(center - 24, center + 26), 0, features.n_frames - 1)
            a = features.frames[idx].ravel()
            for w, b in zip(net.weights[:-1], net.biases[:-1]):
                a = np.maximum(a @ w + b, 0.0)
            acc += a / np.linalg.norm(a)
        if not np.allclose(emb.vector, acc / np.linalg.norm(acc), rtol=1e-9, atol=1e-12):
            failures.append(f"utterance {i} embedding off the straight-line computation")
    subject = subject_embedding(utterances, subject_id="a")
    if abs(np.linalg.norm(subject.vector) - 1.0) > 1e-9:
        failures.append("subject embedding not unit norm")
    _verdict(capsys, label, not failures)
    assert not failures, "; ".join(failures)


def test_07_eer_equals_exhaustive_sweep_exactly(capsys):
    label = "7  eer vs exhaustive threshold sweep (1000 sets)"
    mismatches = 0
    saw_zero = saw_half = False
    for i in range(1000):
        rng = np.random.default_rng(10_000 + i)
        if i % 100 == 0:  # perfectly separated
            genuine = rng.uniform(1.0, 2.0, 6)
            impostor = rng.uniform(-1.0, 0.0, 8)
        elif i % 100 == 50:  # indistinguishable
            genuine = rng.standard_normal(6)
            impostor = genuine.copy()
        else:
            genuine = rng.standard_normal(int(rng.integers(1, 25))) + rng.uniform(0.0, 1.5)
            impostor = rng.standard_normal(int(rng.integers(1, 40)))
            if i % 4 == 0:  # inject ties
                genuine = np.round(genuine, 1)
                impostor = np.round(impostor, 1)
        points, eer, threshold = roc_and_eer(genuine, impostor)
        ref_points, ref_eer, ref_threshold = oracle_roc_eer(genuine, impostor)
        same = (
            eer == ref_eer
            and threshold == ref_threshold
            and [(p.threshold, p.tpr, p.fpr) for p in points] == ref_points
        )
        mismatches += not same
        saw_zero = saw_zero or eer == 0.0
        saw_half = saw_half or eer == 0.5
    passed = mismatches == 0 and saw_zero and saw_half
    _verdict(capsys, label, passed)
    assert mismatches == 0, f"{mismatches}/1000 score sets disagree with the sweep oracle"
    assert saw_zero and saw_half, "degenerate EER values 0 and 0.5 were not exercised"


def test_08_synthetic_corpus_end_to_end(tmp_path_factory, capsys):
    label = "8  10-subject synthetic end-to-end, three backends"
    failures = []
    start = time.perf_counter()
    root = tmp_path_factory.mktemp("desk_scale")
    spec = SyntheticSpec(n_subjects=10, utterances_per_subject=5, seed=0)
    generate_synthetic_corpus(spec, root / "corpus")
    manifest = root / "corpus" / "manifest.csv"
    for backend in ("gmm", "gmm-ubm", "dnn"):
        config = RunConfig(
            manifest=manifest, backend=backend, seed=0, out_dir=root / backend
        )
        run_train(config)
        run_enroll(config)
        report, _ = run_evaluate(config, stream=StringIO())
        if report.identification_accuracy < 0.9:
            failures.append(
                f"{backend}: identification accuracy "
                f"{report.identification_accuracy:.3f} < 0.9"
            )
        if report.eer > 0.15:
            failures.append(f"{backend}: EER {report.eer:.3f} > 0.15")
    elapsed = time.perf_counter() - start
    if elapsed >= 600.0:
        failures.append(f"pipeline took {elapsed:.0f} s (budget 600 s single-threaded)")
    _verdict(capsys, label, not failures)
    assert not failures, "; ".join(failures)


def test_09_same_seed_runs_are_byte_identical(tmp_path_factory, capsys):
    label = "9  same-seed runs byte-identical evaluation report"
    payloads = []
    for attempt in ("first", "second"):
        root = tmp_path_factory.mktemp(f"repro_{attempt}")
        config = RunConfig(
            manifest=root / "corpus" / "manifest.csv",
            backend="gmm-ubm",
            seed=0,
            out_dir=root,
            synth=SyntheticSpec(n_subjects=6, utterances_per_subject=5, seed=3),
        )
        run_synth(config)
        run_train(config)
        run_enroll(config)
        run_evaluate(config, stream=StringIO())
        payloads.append((root / "eval_report.json").read_bytes())
    passed = payloads[0] == payloads[1]
    _verdict(capsys, label, passed)
    assert passed, "two identically seeded pipeline runs wrote different reports"


# Expected results on the restricted-access MPSSC corpus under the
# four-enroll / one-test protocol, with the mixture sizes that protocol
# uses at full corpus scale. Identification tolerances are wider for the
# network backend because its initialization is under-determined.
_REFERENCE_IDENTIFICATION = {
    "gmm": (0.9722, 0.03),
    "gmm-ubm": (0.9861, 0.03),
    "dnn": (0.9306, 0.05),
}
_REFERENCE_OPERATING = {  # (TPR, TNR) at the equal-error threshold
    "gmm": (0.9028, 0.8940),
    "gmm-ubm": (0.9444, 0.9701),
    "dnn": (0.9583, 0.9523),
}


def test_10_restricted_corpus_reproduction(tmp_path_factory, capsys):
    label = "10 restricted-corpus reference reproduction"
    manifest = os.environ.get("MPSSC_MANIFEST")
    if not manifest:
        _skip(capsys, label, "MPSSC_MANIFEST not set")
    failures = []
    root = tmp_path_factory.mktemp("mpssc")
    for backend in ("gmm", "gmm-ubm", "dnn"):
        config = RunConfig(
            manifest=Path(manifest),
            backend=backend,
            seed=0,
            out_dir=root / backend,
            gmm=GmmFitConfig(n_components=10, seed=0),
            ubm=GmmFitConfig(n_components=10, seed=0),
        )
        run_train(config)
        run_enroll(config)
        report, _ = run_evaluate(config, stream=StringIO())
        expected, tolerance = _REFERENCE_IDENTIFICATION[backend]
        if abs(report.identification_accuracy - expected) > tolerance:
            failures.append(
                f"{backend}: identification {report.identification_accuracy:.4f} "
                f"not within {tolerance} of {expected}"
            )
        ref_tpr, ref_tnr = _REFERENCE_OPERATING[backend]
        op = report.operating_point
        if abs(op["tpr"] - ref_tpr) > 0.05 or abs(op["tnr"] - ref_tnr) > 0.05:
            failures.append(
                f"{backend}: operating point ({op['tpr']:.4f}, {op['tnr']:.4f}) "
                f"not within 0.05 of ({ref_tpr}, {ref_tnr})"
            )
    _verdict(capsys, label, not failures)
    assert not failures, "; ".join(failures)
