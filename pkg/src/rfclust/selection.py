"""Correlation-based feature deduplication.

Features are nodes of a graph whose edges join strongly correlated pairs.
Every maximal clique is a group of mutually redundant features, and each
group keeps the single member whose one-feature forest has the lowest
out-of-bag MAE.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .forest import ForestParams, fit, oob_mae

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CorrelationGraph:
    n_nodes: int
    edges: frozenset[tuple[int, int]]

    def adjacency(self) -> list[set[int]]:
        adj = [set() for _ in range(self.n_nodes)]
        for i, j in self.edges:
            adj[i].add(j)
            adj[j].add(i)
        return adj


@dataclass(frozen=True)
class FeatureGroup:
    members: tuple[int, ...]
    representative: int
    member_mae: tuple[float, ...]


@dataclass(frozen=True)
class FeaturePortfolio:
    kept: tuple[int, ...]
    groups: tuple[FeatureGroup, ...] = field(default_factory=tuple)

    @property
    def discarded(self) -> tuple[int, ...]:
        grouped = {m for g in self.groups for m in g.members}
        return tuple(sorted(grouped - set(self.kept)))


def pearson(u, v) -> float:
    """Sample Pearson correlation, clipped to [-1, 1]."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1 or len(u) < 2:
        raise ValueError("pearson needs two equal-length vectors of length >= 2")
    du = u - u.mean()
    dv = v - v.mean()
    nu = math.fsum(du * du)
    nv = math.fsum(dv * dv)
    if nu == 0 or nv == 0:
        raise ValueError("pearson is undefined for a constant vector")
    return float(np.clip(math.fsum(du * dv) / math.sqrt(nu * nv), -1.0, 1.0))


def build_correlation_graph(X_train, threshold: float = 0.9,
                            mode: str = "absolute") -> CorrelationGraph:
    """Edge (i, j) iff ``|r_ij| > threshold`` (``r_ij > threshold`` if signed)."""
    if not 0 < threshold < 1:
        raise ValueError("correlation threshold must lie in (0, 1)")
    if mode not in ("absolute", "signed"):
        raise ValueError(f"unknown correlation mode {mode!r}")
    X = np.asarray(X_train, dtype=np.float64)
    if X.shape[0] < 2:
        raise ValueError("need at least 2 rows")
    p = X.shape[1]
    edges = set()
    for i in range(p):
        for j in range(i + 1, p):
            r = pearson(X[:, i], X[:, j])
            if (abs(r) if mode == "absolute" else r) > threshold:
                edges.add((i, j))
    return CorrelationGraph(p, frozenset(edges))


def _bron_kerbosch(adj, r, p, x, out):
    if not p and not x:
        out.append(r)
        return
    # pivot maximising |P ∩ N(u)| prunes the branching
    pivot = max(p | x, key=lambda u: (len(p & adj[u]), -u))
    for v in sorted(p - adj[pivot]):
        _bron_kerbosch(adj, r | {v}, p & adj[v], x & adj[v], out)
        p = p - {v}
        x = x | {v}


def correlated_groups(graph: CorrelationGraph, min_group_size: int = 2
                      ) -> list[tuple[int, ...]]:
    """All maximal cliques with at least ``min_group_size`` nodes.

    Ordered by smallest member, then size, then the sorted member tuple.
    """
    adj = graph.adjacency()
    cliques: list[set[int]] = []
    _bron_kerbosch(adj, set(), set(range(graph.n_nodes)), set(), cliques)
    groups = [tuple(sorted(c)) for c in cliques if len(c) >= max(2, min_group_size)]
    return sorted(groups, key=lambda g: (g[0], len(g), g))


def select_representatives(groups, X_train, y_train,
                           params: ForestParams | None = None) -> FeaturePortfolio:
    """Keep one feature per correlated group, plus every ungrouped feature.

    A feature belonging to several groups is kept iff it is the
    representative of at least one of them.
    """
    X = np.asarray(X_train, dtype=np.float64)
    y = np.asarray(y_train, dtype=np.float64)
    p = X.shape[1]
    params = params or ForestParams()
    scores: dict[int, float] = {}

    def score(j):
        if j not in scores:
            forest = fit(X[:, [j]], y, params)
            scores[j] = oob_mae(forest, X[:, [j]], y)
        return scores[j]

    out_groups = []
    representatives = set()
    for members in groups:
        maes = tuple(score(j) for j in members)
        best = members[int(np.argmin(maes))]  # argmin takes the first, i.e. lowest index
        representatives.add(best)
        out_groups.append(FeatureGroup(tuple(members), best, maes))

    grouped = {j for g in groups for j in g}
    kept = tuple(j for j in range(p) if j not in grouped or j in representatives)
    overlap = [
        (a, b) for a in representatives for b in representatives
        if a < b and any(a in g and b in g for g in groups)
    ]
    for a, b in sorted(overlap):
        logger.info("representatives %d and %d of overlapping groups both kept", a, b)
    return FeaturePortfolio(kept, tuple(out_groups))


def select_features(X_train, y_train, threshold: float = 0.9,
                    params: ForestParams | None = None, mode: str = "absolute",
                    min_group_size: int = 2) -> FeaturePortfolio:
    graph = build_correlation_graph(X_train, threshold, mode)
    groups = correlated_groups(graph, min_group_size)
    return select_representatives(groups, X_train, y_train, params)
