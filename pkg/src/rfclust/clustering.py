"""Average-linkage agglomerative clustering on cosine distances."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

ZERO_NORM = 1e-15
SNAP = 1e-12


@dataclass(frozen=True)
class Dendrogram:
    """Merge list in the usual linkage-matrix layout.

    Row ``k`` of ``merges`` is ``(cluster_a, cluster_b, distance, size)`` with
    ``cluster_a < cluster_b``. Ids ``0..n-1`` are the input points and the
    cluster formed by row ``k`` gets id ``n + k``.
    """

    merges: np.ndarray
    n_points: int
    linkage: str = "average"
    metric: str = "cosine"

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["step", "cluster_a", "cluster_b", "distance", "size"])
            for k, (a, b, d, s) in enumerate(self.merges):
                w.writerow([k, int(a), int(b), repr(float(d)), int(s)])


@dataclass(frozen=True)
class ClusterAssignment:
    labels: np.ndarray
    m: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.ndim != 1:
            raise ValueError("labels must be 1-D")
        if len(labels) and (labels.min() < 0 or labels.max() >= self.m):
            raise ValueError("labels out of range [0, m)")
        if len(np.unique(labels)) != self.m:
            raise ValueError("every cluster must be nonempty")
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return len(self.labels)


def _dot(a, b) -> float:
    return math.fsum(a * b)  # exactly rounded: independent of memory layout


def cosine_distance_matrix(X) -> np.ndarray:
    """``1 - cosine(x_i, x_j)`` for all row pairs, with an exact zero diagonal."""
    X = np.asarray(X, dtype=np.float64)
    sq = np.array([_dot(x, x) for x in X])
    norms = np.sqrt(sq)
    zero = np.flatnonzero(norms < ZERO_NORM)
    if len(zero):
        raise ValueError(f"zero-norm row(s) {zero.tolist()}: cosine undefined")
    n = len(X)
    d = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            # one dot product per pair, so duplicate rows land exactly on 0
            c = _dot(X[i], X[j]) / math.sqrt(sq[i] * sq[j])
            d[i, j] = d[j, i] = 1.0 - min(1.0, max(-1.0, c))
    # parallel rows differ from 0 only by rounding; snapping keeps the merge
    # order of such points independent of which columns were summed
    d[d < SNAP] = 0.0
    return d


def agglomerate(d, linkage: str = "average") -> Dendrogram:
    """Average-linkage agglomeration via the Lance–Williams update.

    Ties in merge distance go to the lexicographically smallest
    ``(cluster_a, cluster_b)`` id pair.
    """
    if linkage != "average":
        raise ValueError("only average linkage is supported")
    d = np.asarray(d, dtype=np.float64)
    n = d.shape[0]
    if d.ndim != 2 or d.shape != (n, n):
        raise ValueError("distance matrix must be square")
    if n < 2:
        raise ValueError("need at least 2 points")
    if not np.allclose(d, d.T, rtol=0, atol=1e-12) or np.any(np.diag(d) != 0):
        raise ValueError("distance matrix must be symmetric with zero diagonal")

    size = 2 * n - 1
    D = np.full((size, size), np.inf)
    iu = np.triu_indices(n, 1)
    D[iu] = d[iu]
    counts = np.zeros(size, dtype=np.int64)
    counts[:n] = 1
    active = np.zeros(size, dtype=bool)
    active[:n] = True
    merges = np.empty((n - 1, 4))

    for step in range(n - 1):
        flat = int(np.argmin(D))  # row-major => lexicographic tie-break
        a, b = divmod(flat, size)
        dist = D[a, b]
        new = n + step
        na, nb = counts[a], counts[b]
        merges[step] = (a, b, dist, na + nb)
        others = np.flatnonzero(active)
        others = others[(others != a) & (others != b)]
        da = np.minimum(D[others, a], D[a, others])
        db = np.minimum(D[others, b], D[b, others])
        D[others, new] = (na * da + nb * db) / (na + nb)
        for c in (a, b):
            D[c, :] = np.inf
            D[:, c] = np.inf
            active[c] = False
        active[new] = True
        counts[new] = na + nb
    return Dendrogram(merges, n, linkage, "cosine")


def cut(dendrogram: Dendrogram, m: int) -> ClusterAssignment:
    """Clusters present after the first ``n - m`` merges.

    Labels are numbered by first appearance in point order.
    """
    n = dendrogram.n_points
    if not 1 <= m <= n:
        raise ValueError(f"m must lie in [1, {n}], got {m}")
    parent = list(range(2 * n - 1))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for step in range(n - m):
        a, b = int(dendrogram.merges[step, 0]), int(dendrogram.merges[step, 1])
        parent[find(a)] = n + step
        parent[find(b)] = n + step
    roots = [find(i) for i in range(n)]
    relabel: dict[int, int] = {}
    labels = np.array([relabel.setdefault(r, len(relabel)) for r in roots])
    return ClusterAssignment(labels, m)


def cluster(X, m: int) -> ClusterAssignment:
    return cut(agglomerate(cosine_distance_matrix(X)), m)


def _labels(a) -> np.ndarray:
    return a.labels if isinstance(a, ClusterAssignment) else np.asarray(a, dtype=np.int64)


def silhouette(d, labels) -> float:
    """Mean silhouette coefficient; points in singleton clusters score 0."""
    d = np.asarray(d, dtype=np.float64)
    lab = _labels(labels)
    clusters = np.unique(lab)
    if len(clusters) < 2:
        raise ValueError("silhouette needs at least 2 clusters")
    n = len(lab)
    member = lab[None, :] == clusters[:, None]  # (k, n)
    sizes = member.sum(axis=1)
    sums = member.astype(float) @ d.T  # (k, n): sum of distances to each cluster
    s = np.zeros(n)
    for i in range(n):
        own = np.searchsorted(clusters, lab[i])
        if sizes[own] == 1:
            continue
        a = sums[own, i] / (sizes[own] - 1)
        b = np.min(np.delete(sums[:, i] / sizes, own))
        denom = max(a, b)
        s[i] = 0.0 if denom == 0 else (b - a) / denom
    return float(s.mean())


def cluster_count_curve(X, ms=range(2, 11)) -> dict[int, float]:
    """Mean silhouette of the average-linkage cut for each candidate count."""
    d = cosine_distance_matrix(X)
    dendro = agglomerate(d)
    n = d.shape[0]
    return {m: silhouette(d, cut(dendro, m)) for m in ms if 2 <= m < n}


def disagreement_count(a, b) -> int:
    """Points left unmatched by the best one-to-one matching of cluster labels."""
    la, lb = _labels(a), _labels(b)
    if la.shape != lb.shape:
        raise ValueError("assignments cover different numbers of points")
    ma = a.m if isinstance(a, ClusterAssignment) else int(la.max()) + 1
    mb = b.m if isinstance(b, ClusterAssignment) else int(lb.max()) + 1
    if ma != mb:
        raise ValueError(f"cluster counts differ: {ma} vs {mb}")
    table = np.zeros((ma, ma), dtype=np.int64)
    np.add.at(table, (la, lb), 1)
    rows, cols = linear_sum_assignment(table, maximize=True)
    return int(len(la) - table[rows, cols].sum())
