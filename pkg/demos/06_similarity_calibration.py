"""
Neighbor selection and prediction calibration
=============================================

Training problems whose (weighted) cosine similarity to the test problem
reaches a threshold become neighbors. The final prediction averages the
forest's prediction with the similarity-weighted mean of the neighbors'
targets; with no neighbor it is the forest's prediction.
"""

import numpy as np

from rfclust.similarity import calibrate, cosine, select_neighbors, weighted_cosine

print("cosine([1,2,3],[3,2,1]) =", cosine([1, 2, 3], [3, 2, 1]))
print("weighted, w=[0.75,0.25]:", weighted_cosine([1, 2], [2, 1], [0.75, 0.25]))

X_train = np.array([[1.0, 0.1], [1.0, 0.5], [0.2, 1.0], [1.0, 0.0]])
ids = ["a", "b", "c", "d"]
y_train = {"a": 2.0, "b": 5.0, "c": -1.0, "d": 2.5}
x_test = np.array([1.0, 0.2])

rf_prediction = 1.0
for threshold in (0.5, 0.99, 0.999):
    neighbors = select_neighbors(x_test, X_train, ids, threshold)
    result = calibrate(rf_prediction, neighbors, y_train)
    print(f"s >= {threshold}: neighbors {neighbors.ids}, final {result.final:.4f}")

# Emphasising the second feature changes who counts as similar.
neighbors = select_neighbors(x_test, X_train, ids, 0.9, w=[0.2, 0.8])
print("weighted neighbors:", neighbors.ids)
