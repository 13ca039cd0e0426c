"""Bagged regression trees (CART, squared error) with out-of-bag bookkeeping.

Trees are grown greedily. Candidate thresholds are midpoints between
consecutive distinct sorted values. Gain ties go to the lowest feature index,
then the lowest threshold. Rows are put into a canonical order before
bootstrapping, so the fitted forest does not depend on the order of the
training rows.
"""

from __future__ import annotations

import hashlib
import json
import logging
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from numba import njit

logger = logging.getLogger(__name__)

_LEAF = -1


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_depth: int | None = None
    min_samples_split: int = 2
    min_samples_leaf: int = 1
    max_features: float = 1.0
    bootstrap: bool = True
    seed: int = 1

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be a positive integer or None")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        if not 0.0 < self.max_features <= 1.0:
            raise ValueError("max_features must be a fraction in (0, 1]")


@dataclass(frozen=True)
class Tree:
    """Flat binary tree; ``feature == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return _predict_tree(self.feature, self.threshold, self.left,
                             self.right, self.value, X)


@dataclass(frozen=True, eq=False)
class Forest:
    trees: tuple[Tree, ...]
    oob_masks: tuple[np.ndarray, ...]
    params: ForestParams
    feature_count: int
    _flat: tuple = field(default=None, repr=False)

    def __post_init__(self):
        offsets = np.cumsum([0] + [t.n_nodes for t in self.trees])
        flat = (
            np.concatenate([t.feature for t in self.trees]),
            np.concatenate([t.threshold for t in self.trees]),
            np.concatenate([t.left for t in self.trees]),
            np.concatenate([t.right for t in self.trees]),
            np.concatenate([t.value for t in self.trees]),
            offsets[:-1].astype(np.int64),
        )
        object.__setattr__(self, "_flat", flat)

    def tree_predictions(self, X) -> np.ndarray:
        """Per-tree predictions, shape ``(n_trees, n_rows)``."""
        X = _check_X(X, self.feature_count)
        return _predict_forest(*self._flat, X)

    def predict(self, X) -> np.ndarray:
        return predict(self, X)

    def to_dict(self) -> dict:
        return {
            "params": asdict(self.params),
            "feature_count": self.feature_count,
            "trees": [
                {
                    "feature": t.feature.tolist(),
                    "threshold": t.threshold.tolist(),
                    "left": t.left.tolist(),
                    "right": t.right.tolist(),
                    "value": t.value.tolist(),
                }
                for t in self.trees
            ],
            "oob": [np.flatnonzero(m).tolist() for m in self.oob_masks],
            "n_rows": int(len(self.oob_masks[0])) if self.oob_masks else 0,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Forest":
        trees = tuple(
            Tree(
                np.asarray(t["feature"], dtype=np.int64),
                np.asarray(t["threshold"], dtype=np.float64),
                np.asarray(t["left"], dtype=np.int64),
                np.asarray(t["right"], dtype=np.int64),
                np.asarray(t["value"], dtype=np.float64),
            )
            for t in data["trees"]
        )
        masks = []
        for idx in data["oob"]:
            m = np.zeros(data["n_rows"], dtype=bool)
            m[idx] = True
            masks.append(m)
        return cls(trees, tuple(masks), ForestParams(**data["params"]),
                   data["feature_count"])

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json() + "\n")

    @classmethod
    def load(cls, path) -> "Forest":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def sha256(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()


def _check_X(X, n_features) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != n_features:
        raise ValueError(
            f"expected {n_features} features, got shape {X.shape}"
        )
    return np.ascontiguousarray(X)


_TIE_RTOL = 1e-12


@njit(cache=True)
def _grow_tree(X, y, sample_idx, max_depth, min_split, min_leaf, n_try, seed):
    n_total = sample_idx.shape[0]
    n_features = X.shape[1]
    cap = 2 * n_total + 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap, dtype=np.float64)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros(cap, dtype=np.float64)

    if n_try < n_features:
        np.random.seed(seed)
    samples = sample_idx.copy()
    # stack of (node, start, end, depth)
    stack = np.empty((cap, 4), dtype=np.int64)
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = n_total
    stack[0, 3] = 0
    top = 1
    n_nodes = 1
    xs = np.empty(n_total, dtype=np.float64)
    ys = np.empty(n_total, dtype=np.float64)

    while top > 0:
        top -= 1
        node = stack[top, 0]
        start = stack[top, 1]
        end = stack[top, 2]
        depth = stack[top, 3]
        n = end - start

        total = 0.0
        ymin = np.inf
        ymax = -np.inf
        for i in range(start, end):
            v = y[samples[i]]
            total += v
            if v < ymin:
                ymin = v
            if v > ymax:
                ymax = v
        # a pure node stores its value exactly; a mean of copies can drift by an ulp
        value[node] = ymin if ymin == ymax else total / n

        if ymin == ymax or n < min_split or (max_depth > 0 and depth >= max_depth):
            continue

        if n_try < n_features:
            cand = np.sort(np.random.permutation(n_features)[:n_try])
        else:
            cand = np.arange(n_features)

        best_score = -np.inf
        best_f = -1
        best_t = 0.0
        for f in cand:
            for i in range(n):
                xs[i] = X[samples[start + i], f]
            order = np.argsort(xs[:n], kind="mergesort")
            for i in range(n):
                ys[i] = y[samples[start + order[i]]]
            s_left = 0.0
            for i in range(1, n):
                s_left += ys[i - 1]
                if i < min_leaf or n - i < min_leaf:
                    continue
                a = xs[order[i - 1]]
                b = xs[order[i]]
                if not a < b:
                    continue
                s_right = total - s_left
                score = s_left * s_left / i + s_right * s_right / (n - i)
                # the same partition reached through another feature sums its
                # targets in a different order; treat such rounding-level
                # differences as ties so the lowest feature keeps the split
                if best_f < 0 or score > best_score + _TIE_RTOL * best_score:
                    best_score = score
                    best_f = f
                    t = (a + b) / 2.0
                    if t == b:
                        t = a
                    best_t = t

        if best_f < 0:
            continue

        # partition samples[start:end] in place, stable for determinism
        n_left = 0
        for i in range(start, end):
            if X[samples[i], best_f] <= best_t:
                n_left += 1
        tmp = samples[start:end].copy()
        li = start
        ri = start + n_left
        for i in range(n):
            s = tmp[i]
            if X[s, best_f] <= best_t:
                samples[li] = s
                li += 1
            else:
                samples[ri] = s
                ri += 1

        feature[node] = best_f
        threshold[node] = best_t
        lnode = n_nodes
        rnode = n_nodes + 1
        n_nodes += 2
        left[node] = lnode
        right[node] = rnode
        # push right first so the left subtree is numbered first
        stack[top, 0] = rnode
        stack[top, 1] = start + n_left
        stack[top, 2] = end
        stack[top, 3] = depth + 1
        top += 1
        stack[top, 0] = lnode
        stack[top, 1] = start
        stack[top, 2] = start + n_left
        stack[top, 3] = depth + 1
        top += 1

    return (feature[:n_nodes], threshold[:n_nodes], left[:n_nodes],
            right[:n_nodes], value[:n_nodes])


@njit(cache=True)
def _predict_tree(feature, threshold, left, right, value, X):
    out = np.empty(X.shape[0])
    for r in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[r, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[r] = value[node]
    return out


@njit(cache=True)
def _predict_forest(feature, threshold, left, right, value, offsets, X):
    n_trees = offsets.shape[0]
    out = np.empty((n_trees, X.shape[0]))
    for t in range(n_trees):
        base = offsets[t]
        for r in range(X.shape[0]):
            node = 0
            while feature[base + node] >= 0:
                if X[r, feature[base + node]] <= threshold[base + node]:
                    node = left[base + node]
                else:
                    node = right[base + node]
            out[t, r] = value[base + node]
    return out


def _tree_seeds(seed: int, n_trees: int) -> list[np.random.SeedSequence]:
    # counter-based: tree t always gets the same stream, whatever the schedule
    return [np.random.SeedSequence(seed, spawn_key=(t,)) for t in range(n_trees)]


def fit(X, y, params: ForestParams | None = None) -> Forest:
    """Fit a bagged ensemble of regression trees.

    Parameters
    ----------
    X : array-like, shape (n_rows, n_features)
    y : array-like, shape (n_rows,)
    params : ForestParams, optional
        Defaults to 100 fully grown trees on bootstrap samples with all
        features considered at every split, seed 1.

    Returns
    -------
    Forest
        Deterministic given ``(X, y, params.seed)``.
    """
    params = params or ForestParams()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise ValueError("X must be a non-empty 2-D matrix")
    if y.shape != (X.shape[0],):
        raise ValueError(f"y has shape {y.shape}, expected ({X.shape[0]},)")
    if X.shape[0] < 2:
        raise ValueError("need at least 2 training rows")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("X and y must be finite")

    n, p = X.shape
    canon = np.lexsort(np.column_stack([X, y]).T[::-1])
    Xc = np.ascontiguousarray(X[canon])
    yc = np.ascontiguousarray(y[canon])
    n_try = max(1, int(params.max_features * p))
    max_depth = params.max_depth or 0

    trees, masks = [], []
    for ss in _tree_seeds(params.seed, params.n_trees):
        rng = np.random.default_rng(ss)
        if params.bootstrap:
            idx = np.sort(rng.integers(0, n, size=n))
        else:
            idx = np.arange(n)
        node_seed = int(rng.integers(0, 2**31 - 1))
        arrays = _grow_tree(Xc, yc, idx.astype(np.int64), max_depth,
                            params.min_samples_split, params.min_samples_leaf,
                            n_try, node_seed)
        trees.append(Tree(*(a.copy() for a in arrays)))
        oob = np.ones(n, dtype=bool)
        oob[idx] = False
        mask = np.zeros(n, dtype=bool)
        mask[canon] = oob
        masks.append(mask)
    return Forest(tuple(trees), tuple(masks), params, p)


def predict(forest: Forest, X) -> np.ndarray | float:
    """Mean of per-tree leaf values; a 1-D ``X`` yields a scalar."""
    single = np.ndim(X) == 1
    out = forest.tree_predictions(X).mean(axis=0)
    return float(out[0]) if single else out


def oob_mae(forest: Forest, X, y) -> float:
    """MAE of out-of-bag predictions over rows that are OOB for some tree."""
    if not forest.params.bootstrap:
        raise ValueError("oob_mae requires a forest fitted with bootstrap=True")
    y = np.asarray(y, dtype=np.float64)
    preds = forest.tree_predictions(X)
    masks = np.array(forest.oob_masks)
    if masks.shape[1] != len(y):
        raise ValueError("X/y do not match the rows the forest was fitted on")
    counts = masks.sum(axis=0)
    covered = counts > 0
    if not covered.any():
        raise ValueError("no row is out-of-bag for any tree")
    if not covered.all():
        warnings.warn(
            f"{int((~covered).sum())} row(s) never out-of-bag; excluded from OOB MAE",
            RuntimeWarning, stacklevel=2,
        )
    sums = np.where(masks, preds, 0.0).sum(axis=0)
    oob_pred = sums[covered] / counts[covered]
    return float(np.mean(np.abs(y[covered] - oob_pred)))


def mae(predictions, truth) -> float:
    predictions = np.asarray(predictions, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if predictions.shape != truth.shape:
        raise ValueError("predictions and truth differ in length")
    return float(np.mean(np.abs(predictions - truth)))
