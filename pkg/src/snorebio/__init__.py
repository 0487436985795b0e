"""Snore-based speaker recognition.

Per-frame cepstral features over short snore clips feed three
interchangeable backends: per-subject Gaussian mixtures, mean-adapted
mixtures from a shared background model, and cosine scoring of
embeddings from a small feed-forward network. A synthetic formant
corpus makes the whole pipeline runnable without clinical recordings.
"""

from .audio import AudioClip, read_wav, write_wav
from .dataset import (
    DatasetManifest,
    SplitPlan,
    SyntheticSpec,
    UtteranceRecord,
    generate_synthetic_corpus,
    load_manifest,
    make_split,
    write_manifest,
)
from .dsp import (
    FeatureMatrix,
    MfccConfig,
    StackedFeature,
    extract_mfcc,
    mel_filterbank,
    select_observations,
    stack_context,
)
from .embedder import (
    EmbeddingNetwork,
    SnoreEmbedding,
    TrainConfig,
    subject_embedding,
    train_network,
    utterance_embedding,
)
from .errors import SnoreBioError
from .gmm import GmmFitConfig, GmmModel, fit_gmm, load_gmm, save_gmm, score
from .pipeline import RunConfig, load_run_config
from .recognizer import (
    EvalReport,
    Registry,
    ScoreMatrix,
    cosine_similarity,
    eer_from_roc,
    evaluate,
    identify,
    roc_points,
    verify,
)
from .ubm import MapConfig, fit_ubm, map_adapt

__version__ = "0.1.0"

__all__ = [
    "AudioClip",
    "DatasetManifest",
    "EmbeddingNetwork",
    "EvalReport",
    "FeatureMatrix",
    "GmmFitConfig",
    "GmmModel",
    "MapConfig",
    "MfccConfig",
    "Registry",
    "RunConfig",
    "ScoreMatrix",
    "SnoreBioError",
    "SnoreEmbedding",
    "SplitPlan",
    "StackedFeature",
    "SyntheticSpec",
    "TrainConfig",
    "UtteranceRecord",
    "cosine_similarity",
    "eer_from_roc",
    "evaluate",
    "extract_mfcc",
    "fit_gmm",
    "fit_ubm",
    "generate_synthetic_corpus",
    "identify",
    "load_gmm",
    "load_manifest",
    "load_run_config",
    "make_split",
    "map_adapt",
    "mel_filterbank",
    "read_wav",
    "roc_points",
    "save_gmm",
    "score",
    "select_observations",
    "stack_context",
    "subject_embedding",
    "train_network",
    "utterance_embedding",
    "verify",
    "write_manifest",
    "write_wav",
]
