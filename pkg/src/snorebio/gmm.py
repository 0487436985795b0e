"""Diagonal-covariance Gaussian mixtures: seeded EM fitting and
per-frame average log-likelihood scoring.

Fitting is deterministic for a given (data, config): k-means++ picks the
initial centers from the seeded generator, one hard-assignment step turns
them into a full mixture, then EM runs until the relative improvement of
the mean log-likelihood drops below rel_tol. Variances are floored at
variance_floor_scale times the global per-dimension data variance (plus a
tiny absolute backstop so constant dimensions stay finite). A component
whose responsibility mass underflows is reset to a random training frame
with the global variance rather than aborting the fit; with four-utterance
enrollment sets and large K this regime is expected, not exceptional.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from .dsp import FeatureMatrix
from .errors import EmptyFeatureMatrixError, TooFewFramesError

GMM_FORMAT_VERSION = 1
_DEGENERATE_MASS = 1e-8  # x total frames
_ABS_VARIANCE_BACKSTOP = 1e-12


@dataclass(frozen=True)
class GmmFitConfig:
    n_components: int
    max_iters: int = 200
    rel_tol: float = 1e-6
    variance_floor_scale: float = 1e-4
    seed: int = 0
    n_init: int = 1

    def __post_init__(self):
        if self.n_components < 1:
            raise ValueError(f"n_components must be >= 1, got {self.n_components}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.n_init < 1:
            raise ValueError(f"n_init must be >= 1, got {self.n_init}")


@dataclass(frozen=True)
class GmmModel:
    """K-component diagonal-covariance mixture over feature frames."""

    weights: np.ndarray  # (K,)
    means: np.ndarray  # (K, d)
    variances: np.ndarray  # (K, d)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=np.float64))
        object.__setattr__(self, "means", np.asarray(self.means, dtype=np.float64))
        object.__setattr__(self, "variances", np.asarray(self.variances, dtype=np.float64))
        k = self.weights.shape[0]
        if self.weights.ndim != 1 or self.means.ndim != 2 or self.variances.ndim != 2:
            raise ValueError("weights must be (K,), means and variances (K, d)")
        if self.means.shape[0] != k or self.variances.shape != self.means.shape:
            raise ValueError(
                f"inconsistent shapes: weights {self.weights.shape}, "
                f"means {self.means.shape}, variances {self.variances.shape}"
            )

    @property
    def n_components(self) -> int:
        return len(self.weights)

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def to_dict(self) -> dict:
        return {
            "version": GMM_FORMAT_VERSION,
            "K": self.n_components,
            "dim": self.dim,
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "variances": self.variances.tolist(),
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "GmmModel":
        if payload.get("version") != GMM_FORMAT_VERSION:
            raise ValueError(f"unsupported GMM format version: {payload.get('version')}")
        return cls(
            weights=np.array(payload["weights"]),
            means=np.array(payload["means"]),
            variances=np.array(payload["variances"]),
            meta=dict(payload.get("meta", {})),
        )

    def fingerprint(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def save_gmm(model: GmmModel, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(model.to_dict(), indent=2) + "\n", encoding="utf-8")


def load_gmm(path) -> GmmModel:
    return GmmModel.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _as_rows(features) -> np.ndarray:
    rows = features.frames if isinstance(features, FeatureMatrix) else np.asarray(features)
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2:
        raise ValueError(f"expected 2-D frame array, got shape {rows.shape}")
    return rows


def component_log_densities(model: GmmModel, rows: np.ndarray) -> np.ndarray:
    """log N(x_t; mu_k, diag(var_k)) for every frame and component, (T x K)."""
    inv_var = 1.0 / model.variances
    log_norm = -0.5 * (model.dim * np.log(2.0 * np.pi) + np.log(model.variances).sum(axis=1))
    quad = (
        (rows**2) @ inv_var.T
        - 2.0 * rows @ (model.means * inv_var).T
        + (model.means**2 * inv_var).sum(axis=1)[None, :]
    )
    return log_norm[None, :] - 0.5 * quad


def frame_log_likelihoods(model: GmmModel, features) -> np.ndarray:
    """Per-frame mixture log-likelihood log sum_k w_k N(x_t; ...), (T,)."""
    rows = _as_rows(features)
    if rows.shape[0] == 0:
        raise EmptyFeatureMatrixError("cannot score an empty feature matrix")
    with np.errstate(divide="ignore"):  # zero weights are legal: log 0 = -inf is exact here
        log_w = np.log(model.weights)
    return logsumexp(component_log_densities(model, rows) + log_w[None, :], axis=1)


def score(model: GmmModel, features, reduction: str = "mean") -> float:
    """Utterance score: per-frame average log-likelihood (or raw sum).

    The frame average is the default so score magnitudes, and therefore
    verification thresholds, do not depend on utterance length.
    """
    per_frame = frame_log_likelihoods(model, features)
    if reduction == "mean":
        return float(np.mean(per_frame))
    if reduction == "sum":
        return float(np.sum(per_frame))
    raise ValueError(f"reduction must be 'mean' or 'sum', got {reduction!r}")


def responsibilities(model: GmmModel, rows: np.ndarray) -> np.ndarray:
    """Posterior component probabilities gamma_k(t), (T x K), rows sum to 1."""
    with np.errstate(divide="ignore"):
        log_w = np.log(model.weights)
    log_joint = component_log_densities(model, rows) + log_w[None, :]
    return np.exp(log_joint - logsumexp(log_joint, axis=1, keepdims=True))


def _kmeans_pp_centers(rows: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = rows.shape[0]
    centers = np.empty((k, rows.shape[1]))
    centers[0] = rows[rng.integers(n)]
    d2 = ((rows - centers[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = rng.choice(n, p=d2 / total)
        else:  # all remaining points coincide with a chosen center
            idx = rng.integers(n)
        centers[i] = rows[idx]
        d2 = np.minimum(d2, ((rows - centers[i]) ** 2).sum(axis=1))
    return centers


def _initial_model(rows, k, floor, global_var, rng, meta) -> GmmModel:
    # k-means++ centers, then one hard-assignment M-step.
    centers = _kmeans_pp_centers(rows, k, rng)
    d2 = ((rows[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    assign = d2.argmin(axis=1)
    weights = np.empty(k)
    means = np.empty_like(centers)
    variances = np.empty_like(centers)
    for i in range(k):
        members = rows[assign == i]
        if len(members) == 0:
            means[i] = centers[i]
            variances[i] = global_var
            weights[i] = 1.0
        else:
            means[i] = members.mean(axis=0)
            variances[i] = members.var(axis=0)
            weights[i] = len(members)
    weights /= weights.sum()
    variances = np.maximum(variances, floor)
    return GmmModel(weights=weights, means=means, variances=variances, meta=meta)


def _em_once(rows: np.ndarray, config: GmmFitConfig, seed: int) -> GmmModel:
    n, _ = rows.shape
    k = config.n_components
    rng = np.random.default_rng(seed)
    global_var = rows.var(axis=0)
    floor = np.maximum(config.variance_floor_scale * global_var, _ABS_VARIANCE_BACKSTOP)
    meta = {"training_frame_count": n, "seed": seed}
    model = _initial_model(rows, k, floor, np.maximum(global_var, floor), rng, meta)

    trace: list[float] = []
    ll_prev = -np.inf
    for _ in range(config.max_iters):
        gamma = responsibilities(model, rows)
        ll = float(np.mean(frame_log_likelihoods(model, rows)))
        trace.append(ll)
        if ll - ll_prev < config.rel_tol * abs(ll_prev):
            break
        ll_prev = ll

        mass = gamma.sum(axis=0)
        degenerate = mass < _DEGENERATE_MASS * n
        safe_mass = np.maximum(mass, _DEGENERATE_MASS * n)
        means = (gamma.T @ rows) / safe_mass[:, None]
        second = (gamma.T @ (rows**2)) / safe_mass[:, None]
        variances = np.maximum(second - means**2, floor)
        for i in np.flatnonzero(degenerate):
            means[i] = rows[rng.integers(n)]
            variances[i] = np.maximum(global_var, floor)
            mass[i] = 1.0  # one frame's worth of mass for the revived component
        weights = mass / mass.sum()
        model = GmmModel(weights=weights, means=means, variances=variances, meta=meta)

    model.meta["log_likelihood_trace"] = trace
    return model


def fit_gmm(features, config: GmmFitConfig) -> GmmModel:
    """Fit a diagonal-covariance GMM to feature rows (a FeatureMatrix or
    an (N x d) array of frames pooled across utterances).

    meta records the frame count, seed, and the per-iteration mean
    log-likelihood trace; the trace is non-decreasing up to tiny slack.
    """
    rows = _as_rows(features)
    if rows.shape[0] < config.n_components:
        raise TooFewFramesError(
            f"{rows.shape[0]} frames cannot support {config.n_components} components"
        )
    best = None
    for i in range(config.n_init):
        model = _em_once(rows, config, config.seed + i)
        if best is None or model.meta["log_likelihood_trace"][-1] > best.meta["log_likelihood_trace"][-1]:
            best = model
    return best
