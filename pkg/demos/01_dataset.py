"""
Loading and validating a problem/feature/target dataset
=======================================================

Features and targets live in two CSV files keyed by an ``f_id`` column.
Loading checks every cell and reorders targets to the feature file's order.
"""

import tempfile
from pathlib import Path

import numpy as np

from rfclust.dataset import DatasetError, load_dataset, log_transform_targets, lopo_folds

tmp = Path(tempfile.mkdtemp())

# Three problems, two features. The targets file lists problems in another order.
(tmp / "features.csv").write_text("f_id,ela_a,ela_b\n1,0.5,2.0\n2,1.5,1.0\n3,0.1,0.3\n")
(tmp / "targets.csv").write_text("f_id,DE1\n3,1e-8\n1,100.0\n2,0.001\n")

# Targets here are raw precisions; ``raw_precision`` applies log10 with a floor.
ds = load_dataset(tmp / "features.csv", tmp / "targets.csv", raw_precision=True)
print(ds.problem_ids, ds.feature_names)
print("log10 targets:", ds.target("DE1"))
print("floor at 1e-12:", log_transform_targets([0.0, 1.0], floor=1e-12))

# Every problem is held out exactly once.
for fold in lopo_folds(ds):
    print("test", fold.test_problem, "train", fold.train_problems)

# A bad cell is reported with its problem id and column.
(tmp / "features.csv").write_text("f_id,ela_a,ela_b\n1,0.5,nan\n2,1.5,1.0\n3,0.1,0.3\n")
try:
    load_dataset(tmp / "features.csv", tmp / "targets.csv")
except DatasetError as exc:
    print("rejected:", exc)

assert np.allclose(ds.target("DE1"), [2.0, -3.0, -8.0])
