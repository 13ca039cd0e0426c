"""
Removing redundant features
===========================

Strongly correlated features form a graph. Each maximal clique is a group
of interchangeable features, and only the member with the best
single-feature forest survives.
"""

import numpy as np

from rfclust.forest import ForestParams
from rfclust.selection import build_correlation_graph, correlated_groups, select_features

rng = np.random.default_rng(1)
signal = rng.normal(size=30)
y = signal.copy()
X = np.column_stack([
    signal + 0.3 * rng.normal(size=30),   # 0: noisy view of the signal
    signal,                               # 1: the signal itself
    signal + 0.2 * rng.normal(size=30),   # 2: another noisy view
    rng.normal(size=30),                  # 3: unrelated
])

graph = build_correlation_graph(X, threshold=0.9)
print("edges:", sorted(graph.edges))
print("groups:", correlated_groups(graph))

portfolio = select_features(X, y, params=ForestParams(n_trees=50))
for g in portfolio.groups:
    print("group", g.members, "OOB MAE", np.round(g.member_mae, 3), "-> keep", g.representative)
print("kept:", portfolio.kept, "discarded:", portfolio.discarded)
