"""Enrollment registries, identification/verification decisions, and the
verification metrics (ROC sweep, EER, operating-point TPR/TNR).

A registry holds one enrolled entry per subject: a per-subject mixture
for the "gmm" and "gmm-ubm" backends (scored by per-frame average
log-likelihood) or a subject embedding for the "dnn" backend (scored by
cosine similarity against the test utterance's embedding). Identification
is the argmax over enrolled subjects with ties broken by registry order;
verification compares the claimed subject's score to a threshold.

The ROC sweeps thresholds over the sorted union of observed scores plus
-inf/+inf sentinels, with TPR(t) the fraction of genuine scores >= t and
FPR(t) the fraction of impostor scores >= t. The EER is where FPR meets
FNR, linearly interpolated between the two bracketing thresholds.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dsp import FeatureMatrix
from .embedder import EmbeddingNetwork, SnoreEmbedding, utterance_embedding
from .errors import (
    EmptyRegistryError,
    EmptyScoresError,
    NonUnitInputError,
    UnknownSubjectError,
)
from .gmm import GmmModel, score as gmm_score

REGISTRY_FORMAT_VERSION = 1
BACKENDS = ("gmm", "gmm-ubm", "dnn")


@dataclass
class Registry:
    """Per-subject enrollment entries plus the backend's shared model."""

    backend: str
    subjects: tuple[str, ...]
    entries: dict  # subject_id -> GmmModel | SnoreEmbedding
    shared: GmmModel | EmbeddingNetwork | None = None
    feature_fingerprint: str = ""

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        missing = [s for s in self.subjects if s not in self.entries]
        if missing:
            raise ValueError(f"subjects without entries: {missing}")

    def __len__(self) -> int:
        return len(self.subjects)

    def to_dict(self) -> dict:
        if self.backend == "dnn":
            entries = {s: self.entries[s].vector.tolist() for s in self.subjects}
            shared = self.shared.to_dict() if self.shared is not None else None
        else:
            entries = {s: self.entries[s].to_dict() for s in self.subjects}
            shared = self.shared.to_dict() if self.shared is not None else None
        return {
            "version": REGISTRY_FORMAT_VERSION,
            "backend": self.backend,
            "feature_fingerprint": self.feature_fingerprint,
            "subjects": list(self.subjects),
            "entries": entries,
            "shared": shared,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "Registry":
        if payload.get("version") != REGISTRY_FORMAT_VERSION:
            raise ValueError(f"unsupported registry format version: {payload.get('version')}")
        backend = payload["backend"]
        subjects = tuple(payload["subjects"])
        if backend == "dnn":
            entries = {
                s: SnoreEmbedding(vector=np.array(v), level="subject", subject_id=s)
                for s, v in payload["entries"].items()
            }
            shared = (
                EmbeddingNetwork.from_dict(payload["shared"]) if payload["shared"] else None
            )
        else:
            entries = {s: GmmModel.from_dict(v) for s, v in payload["entries"].items()}
            shared = GmmModel.from_dict(payload["shared"]) if payload["shared"] else None
        return cls(
            backend=backend,
            subjects=subjects,
            entries=entries,
            shared=shared,
            feature_fingerprint=payload.get("feature_fingerprint", ""),
        )


def save_registry(registry: Registry, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(registry.to_dict(), indent=2) + "\n", encoding="utf-8")


def load_registry(path) -> Registry:
    return Registry.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def cosine_similarity(a: SnoreEmbedding, b: SnoreEmbedding) -> float:
    """Dot product of unit-norm embeddings (rejects non-unit inputs)."""
    for name, emb in (("a", a), ("b", b)):
        norm = float(np.linalg.norm(emb.vector))
        if abs(norm - 1.0) > 1e-6:
            raise NonUnitInputError(f"embedding {name} has norm {norm!r}, expected 1")
    return float(np.dot(a.vector, b.vector))


def _test_representation(registry: Registry, test_features: FeatureMatrix):
    if registry.backend == "dnn":
        if registry.shared is None:
            raise ValueError("dnn registry is missing its shared embedding network")
        return utterance_embedding(registry.shared, test_features)
    return test_features


def _entry_score(registry: Registry, representation, subject: str) -> float:
    entry = registry.entries[subject]
    if registry.backend == "dnn":
        return cosine_similarity(representation, entry)
    return gmm_score(entry, representation)


def score_against_all(registry: Registry, test_features: FeatureMatrix) -> np.ndarray:
    """Backend score of one test utterance against every enrolled subject."""
    if len(registry) == 0:
        raise EmptyRegistryError("registry has no enrolled subjects")
    representation = _test_representation(registry, test_features)
    return np.array([_entry_score(registry, representation, s) for s in registry.subjects])


def identify(registry: Registry, test_features: FeatureMatrix) -> tuple[str, np.ndarray]:
    """Closed-set identification: the best-scoring enrolled subject.

    Ties go to the earliest subject in registry order (argmax semantics).
    """
    scores = score_against_all(registry, test_features)
    return registry.subjects[int(np.argmax(scores))], scores


def verify(
    registry: Registry, claimed: str, test_features: FeatureMatrix, threshold: float
) -> tuple[bool, float]:
    """Accept the claimed identity iff its score reaches the threshold."""
    if claimed not in registry.entries:
        raise UnknownSubjectError(f"subject {claimed!r} is not enrolled")
    representation = _test_representation(registry, test_features)
    value = _entry_score(registry, representation, claimed)
    return value >= threshold, value


@dataclass
class ScoreMatrix:
    """Cross-scoring of test utterances (rows) against enrolled subjects (cols)."""

    values: np.ndarray
    row_labels: list[str]
    col_labels: list[str]

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (len(self.row_labels), len(self.col_labels)):
            raise ValueError(
                f"matrix shape {self.values.shape} does not match labels "
                f"({len(self.row_labels)} x {len(self.col_labels)})"
            )

    def write_csv(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as fh:
            fh.write("test_id," + ",".join(self.col_labels) + "\n")
            for label, row in zip(self.row_labels, self.values):
                fh.write(label + "," + ",".join(f"{v:.9g}" for v in row) + "\n")


def score_matrix(registry: Registry, tests) -> ScoreMatrix:
    """Score every (true_subject_id, FeatureMatrix) test against every subject.

    When tests are ordered by registry subject order the diagonal holds
    the genuine trials.
    """
    tests = list(tests)
    if len(registry) == 0:
        raise EmptyRegistryError("registry has no enrolled subjects")
    if not tests:
        raise EmptyScoresError("no test utterances supplied")
    rows = [score_against_all(registry, features) for _, features in tests]
    return ScoreMatrix(
        values=np.vstack(rows),
        row_labels=[subject for subject, _ in tests],
        col_labels=list(registry.subjects),
    )


@dataclass
class RocPoint:
    threshold: float
    tpr: float
    fpr: float


@dataclass
class EvalReport:
    identification_accuracy: float
    roc: list[RocPoint]
    eer: float
    eer_threshold: float
    operating_point: dict  # {"threshold", "tpr", "tnr"}
    n_genuine_trials: int = 0
    n_impostor_trials: int = 0

    def to_dict(self) -> dict:
        return {
            "identification_accuracy": self.identification_accuracy,
            "eer": self.eer,
            "eer_threshold": self.eer_threshold,
            "operating_point": self.operating_point,
            "n_genuine_trials": self.n_genuine_trials,
            "n_impostor_trials": self.n_impostor_trials,
            "roc": [[p.threshold, p.tpr, p.fpr] for p in self.roc],
        }


def roc_points(genuine_scores, impostor_scores) -> list[RocPoint]:
    """ROC step function over the sorted union of scores with +-inf sentinels.

    Points are sorted by ascending threshold, from (TPR, FPR) = (1, 1) at
    -inf down to (0, 0) at +inf.
    """
    genuine = np.sort(np.asarray(genuine_scores, dtype=np.float64))
    impostor = np.sort(np.asarray(impostor_scores, dtype=np.float64))
    if len(genuine) == 0 or len(impostor) == 0:
        raise EmptyScoresError("need non-empty genuine and impostor score lists")
    thresholds = np.concatenate(
        [[-np.inf], np.unique(np.concatenate([genuine, impostor])), [np.inf]]
    )
    tpr = (len(genuine) - np.searchsorted(genuine, thresholds, side="left")) / len(genuine)
    fpr = (len(impostor) - np.searchsorted(impostor, thresholds, side="left")) / len(impostor)
    return [RocPoint(float(t), float(tp), float(fp)) for t, tp, fp in zip(thresholds, tpr, fpr)]


def eer_from_roc(points: list[RocPoint]) -> tuple[float, float]:
    """Equal error rate and its threshold from a threshold-sorted ROC.

    FNR - FPR is non-decreasing in the threshold; the EER sits where it
    crosses zero, linearly interpolated between the bracketing points.
    """
    fnr = np.array([1.0 - p.tpr for p in points])
    fpr = np.array([p.fpr for p in points])
    diff = fnr - fpr
    i = int(np.argmax(diff >= 0.0))
    if diff[i] == 0.0:
        return float(fpr[i]), float(points[i].threshold)
    lam = (fpr[i - 1] - fnr[i - 1]) / ((fnr[i] - fnr[i - 1]) - (fpr[i] - fpr[i - 1]))
    eer = fnr[i - 1] + lam * (fnr[i] - fnr[i - 1])
    t_lo, t_hi = points[i - 1].threshold, points[i].threshold
    if np.isinf(t_hi):  # crossing beyond the largest observed score
        threshold = t_lo
    else:
        threshold = t_lo + lam * (t_hi - t_lo)
    return float(eer), float(threshold)


def operating_point(genuine_scores, impostor_scores, threshold: float) -> tuple[float, float]:
    """(TPR, TNR) of accept-iff-score>=threshold at a given threshold."""
    genuine = np.asarray(genuine_scores, dtype=np.float64)
    impostor = np.asarray(impostor_scores, dtype=np.float64)
    if len(genuine) == 0 or len(impostor) == 0:
        raise EmptyScoresError("need non-empty genuine and impostor score lists")
    tpr = float(np.mean(genuine >= threshold))
    tnr = float(np.mean(impostor < threshold))
    return tpr, tnr


def roc_and_eer(genuine_scores, impostor_scores) -> tuple[list[RocPoint], float, float]:
    """Full sweep: (roc points, eer, eer threshold)."""
    points = roc_points(genuine_scores, impostor_scores)
    eer, threshold = eer_from_roc(points)
    return points, eer, threshold


def write_roc_csv(points: list[RocPoint], path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        fh.write("threshold,tpr,fpr\n")
        for p in points:
            fh.write(f"{p.threshold},{p.tpr},{p.fpr}\n")


def evaluate(
    registry: Registry, tests, operating_threshold: float | None = None
) -> tuple[EvalReport, ScoreMatrix]:
    """Run the full identification + verification evaluation.

    tests: (true_subject_id, FeatureMatrix) pairs, one per test
    utterance; every test subject must be enrolled. Verification trials
    are all (test, claimed) pairs: genuine where claimed is the true
    subject, impostor otherwise. The operating point defaults to the EER
    threshold when none is supplied.
    """
    matrix = score_matrix(registry, tests)
    col_index = {s: j for j, s in enumerate(matrix.col_labels)}
    for subject, _ in tests:
        if subject not in col_index:
            raise UnknownSubjectError(f"test subject {subject!r} is not enrolled")

    predicted = [matrix.col_labels[int(np.argmax(row))] for row in matrix.values]
    accuracy = float(np.mean([p == t for p, (t, _) in zip(predicted, tests)]))

    genuine, impostor = [], []
    for row, (true_subject, _) in zip(matrix.values, tests):
        j = col_index[true_subject]
        genuine.append(row[j])
        impostor.extend(np.delete(row, j))
    points, eer, eer_threshold = roc_and_eer(genuine, impostor)
    threshold = eer_threshold if operating_threshold is None else operating_threshold
    tpr, tnr = operating_point(genuine, impostor, threshold)
    report = EvalReport(
        identification_accuracy=accuracy,
        roc=points,
        eer=eer,
        eer_threshold=eer_threshold,
        operating_point={"threshold": float(threshold), "tpr": tpr, "tnr": tnr},
        n_genuine_trials=len(genuine),
        n_impostor_trials=len(impostor),
    )
    return report, matrix
