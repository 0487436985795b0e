"""Three-phase pipeline orchestration: develop/train, enroll, evaluate.

A run is described by a TOML config file (flat keys plus optional
[mfcc] / [gmm] / [map] / [train] / [synth] sections); relative paths in
the file resolve against the file's directory. Every phase writes its
artifacts under out_dir:

    ubm.json / network.json   shared model (train phase)
    registry.json             enrolled subjects (enroll phase)
    eval_report.json          metrics (evaluate phase)
    score_matrix.csv          tests x subjects cross-scores
    roc.csv                   threshold,tpr,fpr rows
    run_meta_<phase>.json     config hash, seed, timestamps

eval_report.json contains no timestamps, so identical config + corpus +
seed reproduce it byte for byte; provenance lives in the run-metadata
files instead.
"""

from __future__ import annotations

import hashlib
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .audio import read_wav
from .dataset import (
    DatasetManifest,
    SplitPlan,
    SyntheticSpec,
    UtteranceRecord,
    generate_synthetic_corpus,
    load_manifest,
    make_split,
)
from .dsp import (
    MfccConfig,
    extract_mfcc,
    write_features_csv,
    write_power_spectrogram_csv,
)
from .embedder import (
    TrainConfig,
    load_network,
    save_network,
    subject_embedding,
    train_network,
    utterance_embedding,
)
from .errors import MissingFileError, SnoreBioError
from .gmm import GmmFitConfig, fit_gmm, load_gmm, save_gmm
from .recognizer import (
    EvalReport,
    Registry,
    ScoreMatrix,
    evaluate,
    identify,
    load_registry,
    save_registry,
    verify,
    write_roc_csv,
)
from .ubm import MapConfig, fit_ubm, map_adapt

DEFAULT_SWEEP_COMPONENTS = (5, 10, 15, 20, 25)


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved configuration of one pipeline run."""

    manifest: Path | None
    backend: str = "gmm"
    seed: int = 0
    out_dir: Path = Path("runs")
    threads: int = 1
    threshold: float | None = None
    min_utterances: int = 5
    mfcc: MfccConfig = MfccConfig()
    gmm: GmmFitConfig = GmmFitConfig(n_components=10)
    # The background model wants far fewer components than subjects, so
    # components span subjects and adaptation moves them measurably;
    # scale up with the corpus (the reference protocol used 10 for 72).
    ubm: GmmFitConfig = GmmFitConfig(n_components=3)
    map_: MapConfig = MapConfig()
    train: TrainConfig = TrainConfig()
    synth: SyntheticSpec | None = None

    def config_hash(self) -> str:
        payload = json.dumps(_jsonable(asdict(self)), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, Path):
        return str(value)
    return value


def _resolve(base: Path, value) -> Path:
    path = Path(value)
    return path if path.is_absolute() else base / path


def load_run_config(path, **overrides) -> RunConfig:
    """Parse a TOML run config; keyword overrides beat file values."""
    path = Path(path)
    if not path.exists():
        raise MissingFileError(f"no such config file: {path}")
    with path.open("rb") as fh:
        try:
            raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise SnoreBioError(f"{path}: bad TOML: {exc}") from exc
    base = path.parent
    top = {k: v for k, v in raw.items() if not isinstance(v, dict)}
    top.update({k: v for k, v in overrides.items() if v is not None})

    def build(cls, section_name, section, **defaults):
        merged = {**defaults, **section}
        try:
            return cls(**merged)
        except (TypeError, ValueError) as exc:
            raise SnoreBioError(f"{path}: bad [{section_name}] section: {exc}") from exc

    seed = int(top.get("seed", 0))
    mfcc = build(MfccConfig, "mfcc", raw.get("mfcc", {}))
    synth = None
    if "synth" in raw:
        synth = build(
            SyntheticSpec,
            "synth",
            raw["synth"],
            seed=seed,
            sample_rate_hz=mfcc.sample_rate_hz,
        )

    manifest = top.get("manifest")
    return RunConfig(
        manifest=_resolve(base, manifest) if manifest else None,
        backend=top.get("backend", "gmm"),
        seed=seed,
        out_dir=_resolve(base, top.get("out_dir", "runs")),
        threads=int(top.get("threads", 1)),
        threshold=top.get("threshold"),
        min_utterances=int(top.get("min_utterances", 5)),
        mfcc=mfcc,
        gmm=build(GmmFitConfig, "gmm", raw.get("gmm", {}), n_components=10, seed=seed),
        ubm=build(GmmFitConfig, "ubm", raw.get("ubm", {}), n_components=3, seed=seed),
        map_=build(MapConfig, "map", raw.get("map", {})),
        train=build(TrainConfig, "train", raw.get("train", {}), seed=seed),
        synth=synth,
    )


def _write_run_meta(config: RunConfig, phase: str, outputs: dict) -> None:
    meta = {
        "phase": phase,
        "backend": config.backend,
        "seed": config.seed,
        "config_hash": config.config_hash(),
        "timestamp_unix": time.time(),
        "outputs": {k: str(v) for k, v in outputs.items()},
    }
    path = config.out_dir / f"run_meta_{phase}.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")


def _require_manifest(config: RunConfig) -> DatasetManifest:
    if config.manifest is None:
        raise MissingFileError("config does not name a manifest")
    return load_manifest(config.manifest)


class FeatureCache:
    """Per-record MFCC extraction, computed once per utterance."""

    def __init__(self, manifest: DatasetManifest, config: MfccConfig):
        self.sample_rate_hz = manifest.sample_rate_hz
        self.config = config
        self._cache = {}

    def get(self, record: UtteranceRecord):
        key = (record.subject_id, record.utterance_index)
        if key not in self._cache:
            clip = read_wav(record.audio_path, expected_rate_hz=self.sample_rate_hz)
            self._cache[key] = extract_mfcc(clip, self.config)
        return self._cache[key]

    def stacked_rows(self, records):
        import numpy as np

        return np.vstack([self.get(rec).frames for rec in records])


def _map_subjects(subjects, fn, threads: int):
    """Apply fn per subject, optionally on a thread pool; order-stable output."""
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(fn, subjects))
    else:
        results = [fn(s) for s in subjects]
    return dict(zip(subjects, results))


def run_synth(config: RunConfig, out_dir: Path | None = None) -> Path:
    """Generate the synthetic corpus; returns the manifest path."""
    if config.synth is None:
        raise SnoreBioError("config has no [synth] section")
    target = Path(out_dir) if out_dir is not None else config.out_dir / "corpus"
    generate_synthetic_corpus(config.synth, target)
    return target / "manifest.csv"


def shared_model_path(config: RunConfig) -> Path | None:
    if config.backend == "gmm-ubm":
        return config.out_dir / "ubm.json"
    if config.backend == "dnn":
        return config.out_dir / "network.json"
    return None


def run_train(config: RunConfig) -> Path | None:
    """Development phase: fit the shared model (UBM or embedding network).

    The plain gmm backend has no shared model; the phase is a recorded
    no-op there.
    """
    target = shared_model_path(config)
    if target is None:
        _write_run_meta(config, "train", {})
        return None
    manifest = _require_manifest(config)
    split = make_split(manifest, config.min_utterances)
    cache = FeatureCache(manifest, config.mfcc)
    if config.backend == "gmm-ubm":
        pool = [cache.stacked_rows(recs) for recs in split.development.values() if recs]
        model = fit_ubm(pool, config.ubm)
        save_gmm(model, target)
    else:
        development = {
            subject: [cache.get(rec) for rec in recs]
            for subject, recs in split.development.items()
            if recs
        }
        network = train_network(development, config.train)
        save_network(network, target)
    _write_run_meta(config, "train", {"shared_model": target})
    return target


def build_registry(config: RunConfig, manifest: DatasetManifest, split: SplitPlan) -> Registry:
    """Enroll every eligible subject with the backend's 4-utterance recipe."""
    cache = FeatureCache(manifest, config.mfcc)
    subjects = list(split.eligible_subjects)
    fingerprint = config.mfcc.fingerprint()

    if config.backend == "gmm":
        def enroll_one(subject):
            rows = cache.stacked_rows(split.enroll[subject])
            seed = config.gmm.seed + subjects.index(subject)
            return fit_gmm(rows, replace(config.gmm, seed=seed))

        entries = _map_subjects(subjects, enroll_one, config.threads)
        shared = None
    elif config.backend == "gmm-ubm":
        ubm = load_gmm(shared_model_path(config))

        def enroll_one(subject):
            return map_adapt(ubm, cache.stacked_rows(split.enroll[subject]), config.map_)

        entries = _map_subjects(subjects, enroll_one, config.threads)
        shared = ubm
    else:  # dnn
        network = load_network(shared_model_path(config))

        def enroll_one(subject):
            per_utt = [utterance_embedding(network, cache.get(rec)) for rec in split.enroll[subject]]
            return subject_embedding(per_utt, subject_id=subject)

        entries = _map_subjects(subjects, enroll_one, config.threads)
        shared = network

    return Registry(
        backend=config.backend,
        subjects=tuple(subjects),
        entries=entries,
        shared=shared,
        feature_fingerprint=fingerprint,
    )


def run_enroll(config: RunConfig) -> Path:
    """Enrollment phase: build and persist the registry."""
    manifest = _require_manifest(config)
    split = make_split(manifest, config.min_utterances)
    registry = build_registry(config, manifest, split)
    target = config.out_dir / "registry.json"
    save_registry(registry, target)
    _write_run_meta(config, "enroll", {"registry": target})
    return target


def _test_set(config: RunConfig, manifest: DatasetManifest, split: SplitPlan):
    cache = FeatureCache(manifest, config.mfcc)
    return [(subject, cache.get(split.test[subject])) for subject in split.eligible_subjects]


def run_evaluate(config: RunConfig, stream=None) -> tuple[EvalReport, ScoreMatrix]:
    """Evaluation phase: score the held-out utterances, write all exports."""
    stream = stream if stream is not None else sys.stdout
    manifest = _require_manifest(config)
    split = make_split(manifest, config.min_utterances)
    registry_path = config.out_dir / "registry.json"
    if not registry_path.exists():
        raise MissingFileError(f"no registry at {registry_path}; run the enroll phase first")
    registry = load_registry(registry_path)
    tests = _test_set(config, manifest, split)
    report, matrix = evaluate(registry, tests, operating_threshold=config.threshold)

    report_path = config.out_dir / "eval_report.json"
    report_path.write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    matrix.write_csv(config.out_dir / "score_matrix.csv")
    write_roc_csv(report.roc, config.out_dir / "roc.csv")
    _write_run_meta(
        config,
        "evaluate",
        {"report": report_path, "score_matrix": config.out_dir / "score_matrix.csv"},
    )

    op = report.operating_point
    print(f"backend               {config.backend}", file=stream)
    print(f"identification_acc    {report.identification_accuracy:.4f}", file=stream)
    print(f"eer                   {report.eer:.4f} (threshold {report.eer_threshold:.4f})", file=stream)
    print(
        f"operating_point       threshold {op['threshold']:.4f}  "
        f"tpr {op['tpr']:.4f}  tnr {op['tnr']:.4f}",
        file=stream,
    )
    return report, matrix


def run_sweep_k(config: RunConfig, components=DEFAULT_SWEEP_COMPONENTS, stream=None):
    """Identification accuracy per mixture size for the GMM backends.

    Re-enrolls and re-evaluates at each K; returns {K: accuracy} and
    writes sweep_k.csv.
    """
    stream = stream if stream is not None else sys.stdout
    if config.backend not in ("gmm", "gmm-ubm"):
        raise SnoreBioError("--sweep-k applies to the gmm and gmm-ubm backends only")
    manifest = _require_manifest(config)
    split = make_split(manifest, config.min_utterances)
    results = {}
    print("n_components,identification_accuracy", file=stream)
    for k in components:
        swept = replace(
            config,
            gmm=replace(config.gmm, n_components=int(k)),
            ubm=replace(config.ubm, n_components=int(k)),
        )
        if swept.backend == "gmm-ubm":
            run_train(swept)
        registry = build_registry(swept, manifest, split)
        tests = _test_set(swept, manifest, split)
        report, _ = evaluate(registry, tests, operating_threshold=swept.threshold)
        results[int(k)] = report.identification_accuracy
        print(f"{k},{report.identification_accuracy:.4f}", file=stream)
    out = config.out_dir / "sweep_k.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8") as fh:
        fh.write("n_components,identification_accuracy\n")
        for k, acc in results.items():
            fh.write(f"{k},{acc}\n")
    return results


def _single_wav_features(config: RunConfig, wav_path):
    clip = read_wav(wav_path, expected_rate_hz=config.mfcc.sample_rate_hz)
    return extract_mfcc(clip, config.mfcc)


def run_identify(config: RunConfig, wav_path, stream=None):
    """Identify one WAV against the persisted registry."""
    stream = stream if stream is not None else sys.stdout
    registry = load_registry(config.out_dir / "registry.json")
    features = _single_wav_features(config, wav_path)
    subject, scores = identify(registry, features)
    print(f"identified_subject    {subject}", file=stream)
    for s, value in zip(registry.subjects, scores):
        print(f"score {s:<16} {value:.6f}", file=stream)
    return subject, scores


def run_verify(config: RunConfig, wav_path, claimed: str, threshold: float, stream=None):
    """Verify a claimed identity for one WAV at a threshold."""
    stream = stream if stream is not None else sys.stdout
    registry = load_registry(config.out_dir / "registry.json")
    features = _single_wav_features(config, wav_path)
    accepted, value = verify(registry, claimed, features, threshold)
    print(f"decision              {'accept' if accepted else 'reject'}", file=stream)
    print(f"score                 {value:.6f} (threshold {threshold})", file=stream)
    return accepted, value


def run_dump_features(config: RunConfig, wav_path, out_path, spectrogram: bool = False) -> Path:
    """Export per-frame MFCCs (or the power spectrogram) of one WAV as CSV."""
    out_path = Path(out_path)
    clip = read_wav(wav_path, expected_rate_hz=config.mfcc.sample_rate_hz)
    if spectrogram:
        write_power_spectrogram_csv(clip, config.mfcc, out_path)
    else:
        write_features_csv(extract_mfcc(clip, config.mfcc), out_path)
    return out_path
