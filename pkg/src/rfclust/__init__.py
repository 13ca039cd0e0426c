"""RF+clust: random-forest performance prediction calibrated by similar training problems."""

from .dataset import Dataset, FoldSpec, load_dataset, log_transform_targets, lopo_folds, write_dataset
from .forest import Forest, ForestParams, fit, mae, oob_mae, predict
from .selection import (
    CorrelationGraph, FeaturePortfolio, build_correlation_graph, correlated_groups, pearson,
    select_features, select_representatives,
)
from .clustering import (
    ClusterAssignment, Dendrogram, agglomerate, cosine_distance_matrix, cut,
    disagreement_count, silhouette,
)
from .importance import WeightVector, normalize_weights, permutation_importance, unsupervised_importance
from .similarity import (
    CalibratedPrediction, NeighborSet, calibrate, cosine, select_neighbors, weighted_cosine,
)
from .harness import FoldResult, RunConfig, RunSummary, run_fold, run_lopo
from .reports import emit_reports
from .fixtures import FixtureSpec, generate

__version__ = "0.1.0"
