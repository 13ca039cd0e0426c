"""Feature weights for the weighted cosine similarity."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .clustering import cluster, disagreement_count
from .forest import Forest

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class WeightVector:
    """Nonnegative weights aligned to a feature portfolio; sum to 1."""

    feature_indices: tuple[int, ...]
    weights: np.ndarray
    raw: np.ndarray | None = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.shape != (len(self.feature_indices),):
            raise ValueError("weights and feature indices differ in length")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "feature_indices", tuple(int(i) for i in self.feature_indices))

    def __len__(self):
        return len(self.weights)

    @classmethod
    def uniform(cls, p: int, feature_indices=None) -> "WeightVector":
        return normalize_weights(np.zeros(p), feature_indices)


def normalize_weights(raw, feature_indices=None) -> WeightVector:
    """Divide by the sum; an all-zero vector becomes uniform."""
    raw = np.asarray(raw, dtype=np.float64)
    if raw.ndim != 1 or len(raw) == 0:
        raise ValueError("raw importances must be a non-empty vector")
    if not np.all(np.isfinite(raw)):
        raise ValueError("raw importances must be finite")
    if np.any(raw < 0):
        raise ValueError("raw importances must be nonnegative (clamp first)")
    if feature_indices is None:
        feature_indices = range(len(raw))
    total = raw.sum()
    if total > 0:
        w = raw / total
    else:
        w = np.full(len(raw), 1.0 / len(raw))
    return WeightVector(tuple(feature_indices), w, raw.copy())


def unsupervised_importance(X_train, m: int = 4, feature_indices=None) -> WeightVector:
    """Weight each feature by how many problems change cluster without it.

    The training problems are clustered into ``m`` groups on all features,
    then again with each feature left out in turn. The disagreement count
    for each left-out feature, normalized to sum 1, is its weight.
    """
    X = np.asarray(X_train, dtype=np.float64)
    n, p = X.shape
    if not 2 <= m <= n:
        raise ValueError(f"need 2 <= m <= n_train, got m={m}, n_train={n}")
    if p < 2:
        raise ValueError("need at least 2 features")
    baseline = cluster(X, m)
    n_diff = np.zeros(p)
    for i in range(p):
        reduced = np.delete(X, i, axis=1)
        n_diff[i] = disagreement_count(baseline, cluster(reduced, m))
    if not n_diff.any():
        logger.warning("no feature removal changed the clustering; using uniform weights")
    return normalize_weights(n_diff, feature_indices)


def permutation_importance(forest: Forest, X, y, n_repeats: int = 15, seed: int = 1,
                           feature_indices=None) -> WeightVector:
    """Mean increase in MAE when one column is shuffled, clamped at 0, normalized.

    Every feature is shuffled with the same ``n_repeats`` row permutations,
    so the result does not depend on column position.
    """
    if n_repeats < 1:
        raise ValueError("n_repeats must be >= 1")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, p = X.shape
    baseline = np.mean(np.abs(forest.predict(X) - y))
    perms = [
        np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(r,))).permutation(n)
        for r in range(n_repeats)
    ]
    raw = np.zeros(p)
    for j in range(p):
        drops = np.empty(n_repeats)
        for r, perm in enumerate(perms):
            Xs = X.copy()
            Xs[:, j] = X[perm, j]
            drops[r] = np.mean(np.abs(forest.predict(Xs) - y)) - baseline
        raw[j] = drops.mean()
    return normalize_weights(np.maximum(raw, 0.0), feature_indices)
