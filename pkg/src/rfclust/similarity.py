"""Cosine similarity, neighbor selection by threshold and prediction calibration."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .importance import WeightVector

logger = logging.getLogger(__name__)

ZERO_NORM = 1e-15


class ZeroNormError(ValueError):
    pass


@dataclass(frozen=True)
class Neighbor:
    problem_id: str
    similarity: float
    contribution: float


@dataclass(frozen=True)
class NeighborSet:
    entries: tuple[Neighbor, ...]
    threshold: float

    def __len__(self):
        return len(self.entries)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(e.problem_id for e in self.entries)


@dataclass(frozen=True)
class CalibratedPrediction:
    rf_prediction: float
    neighbors: NeighborSet
    final: float

    @property
    def k(self) -> int:
        return len(self.neighbors)


def _dot(a: np.ndarray, b: np.ndarray) -> float:
    # exactly rounded, so the result depends only on the values and not on
    # the memory layout that would steer a BLAS kernel's summation order
    return math.fsum(a * b)


def _cos(a: np.ndarray, b: np.ndarray) -> float:
    na = _dot(a, a)
    nb = _dot(b, b)
    if np.sqrt(na) < ZERO_NORM or np.sqrt(nb) < ZERO_NORM:
        raise ZeroNormError("cosine undefined for a zero-norm vector")
    # sqrt(na * nb) rather than sqrt(na) * sqrt(nb): keeps cos(u, u) == 1 exactly
    return float(np.clip(_dot(a, b) / math.sqrt(na * nb), -1.0, 1.0))


def cosine(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError("vectors differ in length")
    return _cos(u, v)


def _weight_array(w, p) -> np.ndarray:
    w = w.weights if isinstance(w, WeightVector) else np.asarray(w, dtype=np.float64)
    if w.shape != (p,):
        raise ValueError(f"weight vector has length {w.size}, expected {p}")
    if np.any(w < 0) or not np.any(w > 0):
        raise ValueError("weights must be nonnegative with positive mass")
    return w


def weighted_cosine(u, v, w) -> float:
    """Cosine with per-coordinate weights: sum w²uv over the weighted norms.

    The weights are rescaled to a unit maximum first (the ratio is scale free),
    which makes uniform weights reproduce :func:`cosine` bit for bit.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError("vectors differ in length")
    w = _weight_array(w, len(u))
    w = w / w.max()
    return _cos(w * u, w * v)


def similarity_row(x_test, X_train, w=None) -> np.ndarray:
    """Similarity of ``x_test`` to each training row; NaN where undefined."""
    X_train = np.asarray(X_train, dtype=np.float64)
    out = np.empty(len(X_train))
    for i, row in enumerate(X_train):
        try:
            out[i] = cosine(x_test, row) if w is None else weighted_cosine(x_test, row, w)
        except ZeroNormError:
            out[i] = np.nan
    return out


def select_neighbors(x_test, X_train, train_ids: Sequence, threshold: float,
                     w=None) -> NeighborSet:
    """All training problems with similarity >= threshold.

    Contributions are similarities divided by their sum. Pairs whose
    similarity is undefined (zero weighted norm) are excluded.
    """
    if not -1 < threshold <= 1:
        raise ValueError("threshold must lie in (-1, 1]")
    if len(train_ids) != len(X_train):
        raise ValueError("train_ids and X_train differ in length")
    s = similarity_row(x_test, X_train, w)
    undefined = np.isnan(s)
    if undefined.any():
        logger.warning("similarity undefined for %d training problem(s); treated as dissimilar",
                       int(undefined.sum()))
    picked = [i for i in np.flatnonzero(~undefined) if s[i] >= threshold]
    picked.sort(key=lambda i: -s[i])  # stable: ties keep training order
    total = float(sum(s[i] for i in picked))
    if picked and total <= 0:
        raise ValueError("selected similarities do not sum to a positive value")
    entries = tuple(
        Neighbor(str(train_ids[i]), float(s[i]), float(s[i] / total)) for i in picked
    )
    return NeighborSet(entries, float(threshold))


def calibrate(rf_prediction: float, neighbors: NeighborSet,
              y_train: Mapping[str, float]) -> CalibratedPrediction:
    """Average the forest prediction with the contribution-weighted neighbor targets."""
    rf_prediction = float(rf_prediction)
    if not neighbors.entries:
        return CalibratedPrediction(rf_prediction, neighbors, rf_prediction)
    try:
        ys = np.array([y_train[e.problem_id] for e in neighbors.entries], dtype=np.float64)
    except KeyError as exc:
        raise KeyError(f"no target for neighbor {exc.args[0]!r}") from None
    contrib = np.array([e.contribution for e in neighbors.entries])
    F = float(contrib @ ys)
    return CalibratedPrediction(rf_prediction, neighbors, (rf_prediction + F) / 2)


def fit_scaler(X_train, mode: str = "none"):
    """Return a function that applies the train-fitted scaling to any matrix."""
    X_train = np.asarray(X_train, dtype=np.float64)
    if mode == "none":
        return lambda X: np.asarray(X, dtype=np.float64)
    if mode == "minmax":
        lo = X_train.min(axis=0)
        span = np.where(np.ptp(X_train, axis=0) > 0, np.ptp(X_train, axis=0), 1.0)
        return lambda X: (np.asarray(X, dtype=np.float64) - lo) / span
    if mode == "zscore":
        mu = X_train.mean(axis=0)
        sd = X_train.std(axis=0)
        sd = np.where(sd > 0, sd, 1.0)
        return lambda X: (np.asarray(X, dtype=np.float64) - mu) / sd
    raise ValueError(f"unknown scaling mode {mode!r}")
