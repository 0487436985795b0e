"""Universal background model training and MAP mean adaptation.

The UBM is an ordinary mixture fit on frames pooled across the whole
development population. Per-subject models are derived from it by
maximum-a-posteriori adaptation of the component means only:

    gamma_k(t)  posterior of component k for frame t under the UBM
    n_k   = sum_t gamma_k(t)
    E_k   = sum_t gamma_k(t) x_t / n_k          (UBM mean when n_k ~ 0)
    alpha = n_k / (n_k + r)
    m_k   = alpha * E_k + (1 - alpha) * mu_k

Weights and variances are copied from the UBM untouched, and the
relevance factor r (default 16) sets how much subject data it takes to
pull a mean away from the background.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyFeatureMatrixError
from .gmm import GmmFitConfig, GmmModel, _as_rows, fit_gmm, responsibilities

_OCCUPANCY_EPS = 1e-10

UbmModel = GmmModel  # a UBM is a GmmModel tagged "ubm" in its meta


@dataclass(frozen=True)
class MapConfig:
    relevance_factor: float = 16.0

    def __post_init__(self):
        if not self.relevance_factor > 0:
            raise ValueError(f"relevance_factor must be > 0, got {self.relevance_factor}")


def fit_ubm(development_features, config: GmmFitConfig) -> GmmModel:
    """Fit the background mixture on pooled development frames.

    development_features may be a single (N x d) array or a sequence of
    FeatureMatrix/array blocks which are stacked in the given order.
    """
    if isinstance(development_features, (list, tuple)):
        blocks = [_as_rows(block) for block in development_features]
        if not blocks:
            raise EmptyFeatureMatrixError("development pool is empty")
        pooled = np.vstack(blocks)
    else:
        pooled = _as_rows(development_features)
    model = fit_gmm(pooled, config)
    model.meta["kind"] = "ubm"
    return model


def map_adapt(ubm: GmmModel, subject_features, config: MapConfig = MapConfig()) -> GmmModel:
    """Adapt the UBM means toward a subject's enrollment frames.

    Returns a new model sharing the UBM's weights and variances; meta
    records the source UBM fingerprint for provenance.
    """
    rows = _as_rows(subject_features)
    if rows.shape[0] == 0:
        raise EmptyFeatureMatrixError("cannot adapt to an empty feature matrix")
    gamma = responsibilities(ubm, rows)
    occupancy = gamma.sum(axis=0)
    posterior_means = np.where(
        occupancy[:, None] > _OCCUPANCY_EPS,
        (gamma.T @ rows) / np.maximum(occupancy, _OCCUPANCY_EPS)[:, None],
        ubm.means,
    )
    alpha = occupancy / (occupancy + config.relevance_factor)
    adapted_means = alpha[:, None] * posterior_means + (1.0 - alpha[:, None]) * ubm.means
    meta = {
        "kind": "map-adapted",
        "adapted_from": ubm.fingerprint(),
        "relevance_factor": config.relevance_factor,
        "adaptation_frame_count": int(rows.shape[0]),
    }
    return GmmModel(
        weights=ubm.weights.copy(),
        means=adapted_means,
        variances=ubm.variances.copy(),
        meta=meta,
    )
