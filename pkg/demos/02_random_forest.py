"""
A seeded random forest regressor
================================

Bagged CART trees grown to full depth. Fitting is deterministic in
``(X, y, seed)`` and does not depend on the order of the rows.
"""

import numpy as np

from rfclust.forest import ForestParams, fit, mae, oob_mae

rng = np.random.default_rng(0)
X = rng.uniform(-2, 2, size=(40, 3))
y = np.sin(X[:, 0]) + 0.1 * rng.normal(size=40)

forest = fit(X, y, ForestParams(n_trees=100, seed=1))
print("training MAE:", mae(forest.predict(X), y))
print("out-of-bag MAE:", oob_mae(forest, X, y))

# Shuffling the rows gives the very same forest.
perm = rng.permutation(40)
again = fit(X[perm], y[perm], ForestParams(n_trees=100, seed=1))
Xq = rng.uniform(-2, 2, size=(5, 3))
print(forest.predict(Xq))
assert np.array_equal(forest.predict(Xq), again.predict(Xq))

# Models serialize to JSON; the hash identifies a fitted model.
print("model sha256:", forest.sha256()[:16], "...")
