"""
Feature weights: unsupervised and permutation importance
========================================================

Unsupervised importance counts how many problems change cluster when a
feature is dropped. Permutation importance measures how much a forest's
error grows when a column is shuffled.
"""

import numpy as np

from rfclust.fixtures import separated_on_first_feature
from rfclust.forest import fit
from rfclust.importance import permutation_importance, unsupervised_importance

# Two groups that differ only in feature 0.
X = separated_on_first_feature(n_per_cluster=6, p=5)
w = unsupervised_importance(X, m=2)
print("cluster changes per dropped feature:", w.raw)
print("unsupervised weights:", w.weights)

# y depends only on x0; x1..x3 are noise.
rng = np.random.default_rng(3)
Xp = rng.normal(size=(30, 4))
y = Xp[:, 0]
forest = fit(Xp, y)
wp = permutation_importance(forest, Xp, y, n_repeats=15, seed=1)
print("mean MAE increase:", np.round(wp.raw, 4))
print("permutation weights:", np.round(wp.weights, 4))
