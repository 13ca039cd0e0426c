"""Leave-one-problem-out evaluation of RF and the RF+clust variants."""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .dataset import Dataset, FoldSpec, drop_constant_columns, lopo_folds
from .forest import Forest, ForestParams, fit, predict
from .importance import WeightVector, permutation_importance, unsupervised_importance
from .selection import FeatureGroup, FeaturePortfolio, select_features
from .similarity import CalibratedPrediction, NeighborSet, calibrate, fit_scaler, select_neighbors, similarity_row

logger = logging.getLogger(__name__)

VARIANTS = ("rf", "rfclust", "rfclust_unsup", "rfclust_perm")
WEIGHT_METHOD = {"rfclust": "uniform", "rfclust_unsup": "unsup", "rfclust_perm": "perm"}
VARIANT_LABELS = {
    "rf": "RF",
    "rfclust": "RF + clust",
    "rfclust_unsup": "RF + clust (unsup.)",
    "rfclust_perm": "RF + clust (perm.)",
}


class FoldError(RuntimeError):
    def __init__(self, problem_id, cause):
        super().__init__(f"fold {problem_id!r} failed: {cause}")
        self.problem_id = problem_id


@dataclass(frozen=True)
class RunConfig:
    algorithm_id: str
    thresholds: tuple[float, ...] = (0.5, 0.7, 0.9)
    variants: tuple[str, ...] = VARIANTS
    correlation_threshold: float = 0.9
    correlation_mode: str = "absolute"
    min_group_size: int = 2
    m_clusters: int = 4
    n_repeats: int = 15
    seed: int = 1
    scaling: str = "none"
    n_trees: int = 100

    def __post_init__(self):
        object.__setattr__(self, "thresholds", tuple(float(t) for t in self.thresholds))
        object.__setattr__(self, "variants", tuple(self.variants))
        if not self.thresholds:
            raise ValueError("at least one threshold is required")
        if any(not 0 < t <= 1 for t in self.thresholds):
            raise ValueError("thresholds must lie in (0, 1]")
        if len(set(self.thresholds)) != len(self.thresholds):
            raise ValueError("duplicate thresholds")
        if not self.variants:
            raise ValueError("at least one variant is required")
        unknown = set(self.variants) - set(VARIANTS)
        if unknown:
            raise ValueError(f"unknown variant(s): {sorted(unknown)}")
        if not 0 < self.correlation_threshold < 1:
            raise ValueError("correlation_threshold must lie in (0, 1)")
        if self.correlation_mode not in ("absolute", "signed"):
            raise ValueError("correlation_mode must be 'absolute' or 'signed'")
        if self.scaling not in ("none", "minmax", "zscore"):
            raise ValueError("scaling must be one of none, minmax, zscore")
        if self.m_clusters < 2:
            raise ValueError("m_clusters must be >= 2")
        if self.n_repeats < 1:
            raise ValueError("n_repeats must be >= 1")
        if self.min_group_size < 2:
            raise ValueError("min_group_size must be >= 2")

    @property
    def forest_params(self) -> ForestParams:
        return ForestParams(n_trees=self.n_trees, seed=self.seed)

    def row_keys(self) -> list[tuple[str, float | None]]:
        """(variant, threshold) rows; rf once, thresholds high to low."""
        keys = []
        for v in VARIANTS:
            if v not in self.variants:
                continue
            if v == "rf":
                keys.append((v, None))
            else:
                keys.extend((v, t) for t in sorted(self.thresholds, reverse=True))
        return keys


@dataclass(eq=False)
class FoldResult:
    test_problem: str
    train_problems: tuple[str, ...]
    truth: float
    feature_names: tuple[str, ...]
    dropped_features: tuple[str, ...]
    portfolio: FeaturePortfolio
    weights: dict[str, WeightVector]
    rf_prediction: float
    predictions: dict[tuple[str, float | None], CalibratedPrediction]
    similarities: dict[str, np.ndarray] = field(default_factory=dict)
    forest: Forest | None = None

    def error(self, variant, threshold=None) -> float:
        key = (variant, None if variant == "rf" else threshold)
        return abs(self.predictions[key].final - self.truth)

    def k(self, variant, threshold=None) -> int:
        return self.predictions[(variant, None if variant == "rf" else threshold)].k

    @property
    def kept_features(self) -> tuple[str, ...]:
        return tuple(self.feature_names[i] for i in self.portfolio.kept)

    def portfolio_dict(self) -> dict:
        names = self.feature_names
        return {
            "kept": list(self.kept_features),
            "dropped_constant": list(self.dropped_features),
            "groups": [
                {
                    "members": [names[i] for i in g.members],
                    "representative": names[g.representative],
                    "oob_mae": list(g.member_mae),
                }
                for g in self.portfolio.groups
            ],
        }

    def weights_dict(self) -> dict:
        return {
            method: {self.feature_names[i]: float(x)
                     for i, x in zip(wv.feature_indices, wv.weights)}
            for method, wv in self.weights.items()
        }

    def artifact_hashes(self) -> dict[str, str]:
        def h(obj):
            return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()
        return {
            "portfolio": h(self.portfolio_dict()),
            "weights": h(self.weights_dict()),
            "forest": self.forest.sha256() if self.forest is not None else "",
        }

    def to_dict(self) -> dict:
        preds = []
        for (variant, thr), cp in self.predictions.items():
            preds.append({
                "variant": variant,
                "threshold": thr,
                "final": cp.final,
                "k": cp.k,
                "error": abs(cp.final - self.truth),
                "neighbors": [
                    {"id": e.problem_id, "similarity": e.similarity,
                     "contribution": e.contribution}
                    for e in cp.neighbors.entries
                ],
            })
        return {
            "test_problem": self.test_problem,
            "train_problems": list(self.train_problems),
            "truth": self.truth,
            "rf_prediction": self.rf_prediction,
            "portfolio": self.portfolio_dict(),
            "weights": self.weights_dict(),
            "predictions": preds,
            "artifacts": self.artifact_hashes(),
        }


def _needed_methods(config: RunConfig) -> list[str]:
    return [WEIGHT_METHOD[v] for v in config.variants if v != "rf"]


def run_fold(dataset: Dataset, fold: FoldSpec, config: RunConfig) -> FoldResult:
    """Run the full pipeline for one held-out problem.

    Column filtering, feature selection, the forest and both importance
    methods only see the training rows. The held-out row enters only through
    the forest prediction and the similarity computation.
    """
    try:
        return _run_fold(dataset, fold, config)
    except FoldError:
        raise
    except Exception as exc:
        raise FoldError(fold.test_problem, exc) from exc


def _run_fold(dataset: Dataset, fold: FoldSpec, config: RunConfig) -> FoldResult:
    y_all = dataset.target(config.algorithm_id)
    train_idx = np.array([dataset.index_of(p) for p in fold.train_problems])
    test_idx = dataset.index_of(fold.test_problem)
    X_train_all = dataset.features[train_idx]
    y_train = y_all[train_idx]
    params = config.forest_params

    varying, dropped = drop_constant_columns(X_train_all, dataset.feature_names)
    local = select_features(
        X_train_all[:, varying], y_train, config.correlation_threshold, params,
        config.correlation_mode, config.min_group_size,
    )
    # re-express portfolio indices against the full feature list
    kept = varying[list(local.kept)]
    portfolio = FeaturePortfolio(
        tuple(int(i) for i in kept),
        tuple(FeatureGroup(tuple(int(varying[m]) for m in g.members),
                           int(varying[g.representative]), g.member_mae)
              for g in local.groups),
    )

    X_train = X_train_all[:, kept]
    x_test = dataset.features[test_idx, kept]
    forest = fit(X_train, y_train, params)
    rf_pred = predict(forest, x_test)

    scale = fit_scaler(X_train, config.scaling)
    S_train, s_test = scale(X_train), scale(x_test[None, :])[0]

    weights: dict[str, WeightVector] = {}
    methods = _needed_methods(config)
    if "uniform" in methods:
        weights["uniform"] = WeightVector.uniform(len(kept), kept)
    if "unsup" in methods:
        weights["unsup"] = unsupervised_importance(S_train, config.m_clusters, kept)
    if "perm" in methods:
        weights["perm"] = permutation_importance(
            forest, X_train, y_train, config.n_repeats, config.seed, kept)

    truth = float(y_all[test_idx])
    y_map = dict(zip(fold.train_problems, y_train.tolist()))
    predictions: dict = {}
    similarities: dict = {}
    for variant, thr in config.row_keys():
        if variant == "rf":
            predictions[(variant, None)] = CalibratedPrediction(
                rf_pred, NeighborSet((), float("inf")), rf_pred)
            continue
        w = weights[WEIGHT_METHOD[variant]]
        similarities.setdefault(WEIGHT_METHOD[variant], similarity_row(s_test, S_train, w))
        ns = select_neighbors(s_test, S_train, fold.train_problems, thr, w)
        predictions[(variant, thr)] = calibrate(rf_pred, ns, y_map)

    return FoldResult(
        test_problem=fold.test_problem,
        train_problems=fold.train_problems,
        truth=truth,
        feature_names=dataset.feature_names,
        dropped_features=tuple(dropped),
        portfolio=portfolio,
        weights=weights,
        rf_prediction=rf_pred,
        predictions=predictions,
        similarities=similarities,
        forest=forest,
    )


@dataclass
class RunSummary:
    config: RunConfig
    problem_ids: tuple[str, ...]
    truth: np.ndarray
    folds: list[FoldResult]

    def row_keys(self):
        return self.config.row_keys()

    def errors(self, variant, threshold=None) -> np.ndarray:
        return np.array([f.error(variant, threshold) for f in self.folds])

    def neighbor_counts(self, variant, threshold=None) -> np.ndarray:
        return np.array([f.k(variant, threshold) for f in self.folds])

    def mae(self, variant, threshold=None) -> float:
        return float(np.mean(self.errors(variant, threshold)))

    def error_matrix(self) -> np.ndarray:
        """Rows follow :meth:`row_keys`, columns follow ``problem_ids``."""
        return np.array([self.errors(v, t) for v, t in self.row_keys()])

    def same_as_rf(self, variant, threshold) -> np.ndarray:
        """Problems where no neighbor passed the threshold (blank heatmap cells)."""
        return self.neighbor_counts(variant, threshold) == 0

    def mae_table(self) -> dict[tuple[str, float | None], float]:
        return {key: self.mae(*key) for key in self.row_keys()}


def _fold_task(args):
    dataset, fold, config = args
    return run_fold(dataset, fold, config)


def run_lopo(dataset: Dataset, config: RunConfig, jobs: int = 1) -> RunSummary:
    """Run every fold; any fold failure aborts the run."""
    folds = lopo_folds(dataset)
    dataset.target(config.algorithm_id)
    tasks = [(dataset, f, config) for f in folds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_fold_task, tasks))
    else:
        results = [_fold_task(t) for t in tasks]
    return RunSummary(config, dataset.problem_ids,
                      np.asarray(dataset.target(config.algorithm_id)), results)


def config_dict(config: RunConfig) -> dict:
    return asdict(config)
