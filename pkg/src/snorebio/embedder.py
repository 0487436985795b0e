"""Supervised feed-forward embedding extractor.

The classifier maps a 1250-dim context-stacked MFCC input through four
ReLU hidden layers of 128 units to a softmax over development subjects,
with 15% dropout on the last hidden activation during training. It is
trained with Adam on mean categorical cross-entropy, all in plain numpy
with an explicitly seeded generator, so a (data, config) pair always
reproduces the same weights bit for bit.

Embeddings come from the trained net with the output layer removed: each
selected observation's last-hidden activation is L2-normalized, the 15
normalized vectors are accumulated, and the accumulated vector is
L2-normalized again to give the utterance embedding. A subject embedding
is the renormalized mean of its four enrollment utterance embeddings.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from .dsp import FeatureMatrix, stack_context, select_observations
from .errors import (
    EmptyDevelopmentSetError,
    EmptyFeatureMatrixError,
    EmptyInputError,
    NormalizationDegenerateError,
    TooFewSubjectsError,
)

NETWORK_FORMAT_VERSION = 1
_NORM_EPS = 1e-12


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 80
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    batch_size: int = 64
    seed: int = 0
    hidden_layers: int = 4
    hidden_units: int = 128
    dropout_rate: float = 0.15
    # 1 = every frame is an observation center (dense); larger values
    # subsample the development frames with this stride.
    train_stride: int = 1

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if self.train_stride < 1:
            raise ValueError(f"train_stride must be >= 1, got {self.train_stride}")


@dataclass
class EmbeddingNetwork:
    """Dense classifier; weights[l] has shape (dims[l], dims[l+1])."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    dropout_rate: float
    subject_labels: tuple[str, ...]
    meta: dict = field(default_factory=dict)

    @property
    def dims(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def embedding_dim(self) -> int:
        return self.weights[-1].shape[0]

    def to_dict(self) -> dict:
        return {
            "version": NETWORK_FORMAT_VERSION,
            "dims": self.dims,
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "dropout_rate": self.dropout_rate,
            "subject_label_order": list(self.subject_labels),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "EmbeddingNetwork":
        if payload.get("version") != NETWORK_FORMAT_VERSION:
            raise ValueError(f"unsupported network format version: {payload.get('version')}")
        return cls(
            weights=[np.array(w) for w in payload["weights"]],
            biases=[np.array(b) for b in payload["biases"]],
            dropout_rate=float(payload["dropout_rate"]),
            subject_labels=tuple(payload["subject_label_order"]),
        )


def save_network(network: EmbeddingNetwork, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(network.to_dict(), indent=2) + "\n", encoding="utf-8")


def load_network(path) -> EmbeddingNetwork:
    return EmbeddingNetwork.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True)
class SnoreEmbedding:
    """L2-normalized identity vector at utterance or subject level."""

    vector: np.ndarray
    level: str  # "utterance" | "subject"
    subject_id: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "vector", np.asarray(self.vector, dtype=np.float64))
        if self.level not in ("utterance", "subject"):
            raise ValueError(f"level must be 'utterance' or 'subject', got {self.level!r}")


def l2_normalize(vector: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(vector))
    if norm < _NORM_EPS:
        raise NormalizationDegenerateError("cannot L2-normalize a (near-)zero vector")
    return vector / norm


def init_network(
    input_dim: int, subject_labels, config: TrainConfig, rng: np.random.Generator
) -> EmbeddingNetwork:
    """He-uniform initialized network for the given label set."""
    dims = [input_dim] + [config.hidden_units] * config.hidden_layers + [len(subject_labels)]
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return EmbeddingNetwork(
        weights=weights,
        biases=biases,
        dropout_rate=config.dropout_rate,
        subject_labels=tuple(subject_labels),
    )


def _forward(network: EmbeddingNetwork, inputs: np.ndarray, dropout_mask=None):
    """Full forward pass; returns (probs, cache) with everything backward needs."""
    a = np.asarray(inputs, dtype=np.float64)
    pre_acts, acts = [], [a]
    for w, b in zip(network.weights[:-1], network.biases[:-1]):
        z = a @ w + b
        a = np.maximum(z, 0.0)
        pre_acts.append(z)
        acts.append(a)
    hidden = a if dropout_mask is None else a * dropout_mask
    logits = hidden @ network.weights[-1] + network.biases[-1]
    log_probs = logits - logsumexp(logits, axis=1, keepdims=True)
    cache = {"pre_acts": pre_acts, "acts": acts, "hidden": hidden, "log_probs": log_probs}
    return np.exp(log_probs), cache


def predict_proba(network: EmbeddingNetwork, inputs: np.ndarray) -> np.ndarray:
    """Inference-mode class probabilities (dropout off); rows sum to 1."""
    probs, _ = _forward(network, np.atleast_2d(inputs))
    return probs


def hidden_activations(network: EmbeddingNetwork, inputs: np.ndarray) -> np.ndarray:
    """Last hidden layer activations with the output layer removed (dropout off)."""
    a = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    for w, b in zip(network.weights[:-1], network.biases[:-1]):
        a = np.maximum(a @ w + b, 0.0)
    return a


def cross_entropy(probs_or_logprobs_cache, targets: np.ndarray) -> float:
    """Mean categorical cross-entropy from a _forward cache."""
    log_probs = probs_or_logprobs_cache["log_probs"]
    return float(-np.sum(targets * log_probs) / targets.shape[0])


def backward(network: EmbeddingNetwork, inputs, targets, cache, dropout_mask=None):
    """Exact gradients of mean cross-entropy w.r.t. every weight and bias.

    The dropout mask, when given, must be the one used in the forward
    pass; holding it fixed makes the gradients finite-difference
    checkable.
    """
    inputs = np.asarray(inputs, dtype=np.float64)
    batch = inputs.shape[0]
    probs = np.exp(cache["log_probs"])
    grad_w = [None] * len(network.weights)
    grad_b = [None] * len(network.biases)

    dlogits = (probs - targets) / batch
    grad_w[-1] = cache["hidden"].T @ dlogits
    grad_b[-1] = dlogits.sum(axis=0)
    da = dlogits @ network.weights[-1].T
    if dropout_mask is not None:
        da = da * dropout_mask
    for layer in range(len(network.weights) - 2, -1, -1):
        dz = da * (cache["pre_acts"][layer] > 0.0)
        grad_w[layer] = cache["acts"][layer].T @ dz
        grad_b[layer] = dz.sum(axis=0)
        if layer > 0:
            da = dz @ network.weights[layer].T
    return grad_w, grad_b


def loss_and_grads(network: EmbeddingNetwork, inputs, targets, dropout_mask=None):
    """One combined forward/backward evaluation (convenience for training and checks)."""
    probs, cache = _forward(network, inputs, dropout_mask)
    loss = cross_entropy(cache, targets)
    grad_w, grad_b = backward(network, inputs, targets, cache, dropout_mask)
    return loss, grad_w, grad_b


def development_examples(
    development: dict[str, list[FeatureMatrix]], subject_labels, stride: int = 1
):
    """Stacked inputs and 1-hot targets for every observation center.

    Every frame of every development utterance is a center (subsampled by
    `stride` if > 1), labeled with its subject's position in
    subject_labels.
    """
    inputs, label_idx = [], []
    for s_idx, subject in enumerate(subject_labels):
        n_before = len(inputs)
        for features in development.get(subject, []):
            for center in range(0, features.n_frames, stride):
                inputs.append(stack_context(features, center).vector)
                label_idx.append(s_idx)
        if len(inputs) == n_before:
            raise EmptyDevelopmentSetError(f"subject {subject!r} contributes no development frames")
    x = np.asarray(inputs)
    targets = np.zeros((len(label_idx), len(subject_labels)))
    targets[np.arange(len(label_idx)), label_idx] = 1.0
    return x, targets


def train_network(
    development: dict[str, list[FeatureMatrix]], config: TrainConfig = TrainConfig()
) -> EmbeddingNetwork:
    """Train the classifier on the development population.

    Runs exactly config.epochs passes with a freshly seeded shuffle per
    epoch and inverted dropout on the last hidden activation. The
    returned network's meta carries the per-epoch mean training loss and
    final training accuracy.
    """
    if len(development) < 2:
        raise TooFewSubjectsError(f"need >= 2 development subjects, got {len(development)}")
    subject_labels = tuple(sorted(development))
    x, targets = development_examples(development, subject_labels, config.train_stride)

    rng = np.random.default_rng(config.seed)
    network = init_network(x.shape[1], subject_labels, config, rng)
    adam_m = [np.zeros_like(p) for p in network.weights + network.biases]
    adam_v = [np.zeros_like(p) for p in network.weights + network.biases]
    step = 0
    keep = 1.0 - config.dropout_rate
    epoch_losses = []
    for _ in range(config.epochs):
        order = rng.permutation(len(x))
        total_loss = 0.0
        for start in range(0, len(x), config.batch_size):
            batch_idx = order[start : start + config.batch_size]
            xb, yb = x[batch_idx], targets[batch_idx]
            if config.dropout_rate > 0.0:
                mask = (rng.random((len(xb), config.hidden_units)) < keep) / keep
            else:
                mask = None
            loss, grad_w, grad_b = loss_and_grads(network, xb, yb, mask)
            total_loss += loss * len(xb)

            step += 1
            params = network.weights + network.biases
            grads = grad_w + grad_b
            for p, g, m, v in zip(params, grads, adam_m, adam_v):
                m *= config.beta1
                m += (1.0 - config.beta1) * g
                v *= config.beta2
                v += (1.0 - config.beta2) * g**2
                m_hat = m / (1.0 - config.beta1**step)
                v_hat = v / (1.0 - config.beta2**step)
                p -= config.learning_rate * m_hat / (np.sqrt(v_hat) + config.epsilon)
        epoch_losses.append(total_loss / len(x))

    predictions = predict_proba(network, x).argmax(axis=1)
    network.meta = {
        "epoch_losses": epoch_losses,
        "final_train_accuracy": float(np.mean(predictions == targets.argmax(axis=1))),
        "seed": config.seed,
        "n_examples": len(x),
    }
    return network


def utterance_embedding(
    network: EmbeddingNetwork,
    features: FeatureMatrix,
    count: int = 15,
    stride: int = 5,
    accumulate: str = "sum",
) -> SnoreEmbedding:
    """Utterance-level embedding from `count` stride-spaced observations.

    Each observation's last-hidden activation is L2-normalized, the
    vectors are accumulated (sum or mean; identical direction either
    way), and the result is L2-normalized.
    """
    if accumulate not in ("sum", "mean"):
        raise ValueError(f"accumulate must be 'sum' or 'mean', got {accumulate!r}")
    if features.n_frames == 0:
        raise EmptyFeatureMatrixError("cannot embed an empty feature matrix")
    observations = select_observations(features, count=count, stride=stride)
    activations = hidden_activations(network, np.stack([o.vector for o in observations]))
    normalized = np.stack([l2_normalize(row) for row in activations])
    accumulated = normalized.sum(axis=0)
    if accumulate == "mean":
        accumulated = accumulated / len(observations)
    return SnoreEmbedding(vector=l2_normalize(accumulated), level="utterance")


def subject_embedding(utterance_embeddings, subject_id: str | None = None) -> SnoreEmbedding:
    """Subject-level embedding: renormalized mean of utterance embeddings."""
    embeddings = list(utterance_embeddings)
    if not embeddings:
        raise EmptyInputError("need at least one utterance embedding")
    mean = np.mean([e.vector for e in embeddings], axis=0)
    return SnoreEmbedding(vector=l2_normalize(mean), level="subject", subject_id=subject_id)


def write_embeddings_csv(embeddings, path) -> None:
    """Rows of `subject_id,e0..e127` (external plotting feed)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        dim = len(embeddings[0].vector) if embeddings else 0
        fh.write("subject_id," + ",".join(f"e{i}" for i in range(dim)) + "\n")
        for emb in embeddings:
            values = ",".join(f"{v:.9g}" for v in emb.vector)
            fh.write(f"{emb.subject_id or ''},{values}\n")
