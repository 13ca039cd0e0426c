"""Deterministic synthetic datasets with planted structure.

Layout of a generated problem's feature vector::

    [relevant (p_relevant) | copies (n_correlated_copies) | nuisance (p_nuisance) | marker?]

Relevant features sit at ``low`` except that cluster ``k >= 1`` is ``high``
on the relevant features ``j`` with ``j % (n_clusters - 1) == k - 1``.
Removing the only feature a cluster is high on makes it collinear with
cluster 0, so relevant features are visible to clustering. Nuisance
features sit near 1 with small independent noise; cosine similarity is
driven by the relevant block. Copies are noisy duplicates of relevant
feature 0. Targets are a per-cluster base value plus bounded noise.

Deceptive problems keep their cluster's features, so they stay highly
cosine-similar to it, but their target is moved far away. A low-amplitude
``marker`` column flags them. The forest can split on the marker, while the
marker barely moves cosine similarity, so similarity-based calibration is
misled on exactly those problems.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .dataset import Dataset, write_dataset


@dataclass(frozen=True)
class FixtureSpec:
    n_problems: int = 30
    p_relevant: int = 3
    p_nuisance: int = 14
    n_correlated_copies: int = 2
    n_clusters: int = 4
    target_spread: float = 0.5
    deceptive_fraction: float = 0.0
    seed: int = 0
    high: float = 10.0
    low: float = 1.0
    nuisance_noise: float = 0.15
    deceptive_offset: float = 5.0
    algorithm_id: str = "DE1"

    def validate(self):
        counts = (self.n_problems, self.p_relevant, self.p_nuisance,
                  self.n_correlated_copies, self.n_clusters)
        if any(c < 0 for c in counts):
            raise ValueError("all counts must be >= 0")
        if not 0 <= self.deceptive_fraction <= 1:
            raise ValueError("deceptive_fraction must lie in [0, 1]")
        if self.n_clusters < 2:
            raise ValueError("need at least 2 clusters")
        if self.p_relevant < self.n_clusters - 1:
            raise ValueError(
                f"{self.n_clusters} clusters need >= {self.n_clusters - 1} relevant features"
            )
        if self.n_problems < 2 * self.n_clusters:
            raise ValueError("need at least 2 problems per cluster")
        if self.n_correlated_copies and self.p_relevant == 0:
            raise ValueError("copies need a relevant feature to copy")
        if self.p_relevant + self.p_nuisance < 2:
            raise ValueError("need at least 2 features")
        if self.target_spread < 0:
            raise ValueError("target_spread must be >= 0")


@dataclass(frozen=True)
class Fixture:
    dataset: Dataset
    manifest: dict

    def write(self, out_dir) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_dataset(self.dataset, out / "features.csv", out / "targets.csv")
        (out / "manifest.json").write_text(
            json.dumps(self.manifest, indent=1, sort_keys=True) + "\n", encoding="utf-8"
        )


def generate(spec: FixtureSpec | None = None) -> Fixture:
    spec = spec or FixtureSpec()
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    n, K = spec.n_problems, spec.n_clusters

    labels = np.arange(n) % K
    rng.shuffle(labels)

    owner = np.arange(spec.p_relevant) % (K - 1) + 1  # cluster that is high on feature j
    relevant = np.where(labels[:, None] == owner[None, :], spec.high, spec.low)
    relevant = relevant * (1.0 + rng.uniform(-0.02, 0.02, relevant.shape))

    base = rng.permutation(np.linspace(-6.0, 0.0, K))
    noise = rng.uniform(-spec.target_spread / 2, spec.target_spread / 2, n)
    y = base[labels] + noise

    copies = relevant[:, [0]] + rng.normal(0.0, 0.01 * spec.high, (n, spec.n_correlated_copies))
    nuisance = 1.0 + rng.uniform(-spec.nuisance_noise, spec.nuisance_noise, (n, spec.p_nuisance))

    n_deceptive = int(round(spec.deceptive_fraction * n))
    deceptive = np.zeros(n, dtype=bool)
    blocks = [relevant, copies, nuisance]
    names = ([f"rel_{j}" for j in range(spec.p_relevant)]
             + [f"copy_{j}" for j in range(spec.n_correlated_copies)]
             + [f"nuis_{j}" for j in range(spec.p_nuisance)])
    if n_deceptive:
        deceptive[rng.choice(n, n_deceptive, replace=False)] = True
        y[deceptive] = base.max() + spec.deceptive_offset + noise[deceptive]
        blocks.append(np.where(deceptive, 1.0, 0.0)[:, None])
        names.append("marker")
    X = np.hstack(blocks)

    ids = [str(i + 1) for i in range(n)]
    ds = Dataset(ids, names, X, {spec.algorithm_id: y})
    p_rel, p_cp = spec.p_relevant, spec.n_correlated_copies
    manifest = {
        "spec": asdict(spec),
        "cluster_labels": {pid: int(c) for pid, c in zip(ids, labels)},
        "cluster_base": base.tolist(),
        "relevant": names[:p_rel],
        "copies": {names[p_rel + j]: names[0] for j in range(p_cp)},
        "nuisance": names[p_rel + p_cp:p_rel + p_cp + spec.p_nuisance],
        "marker": "marker" if n_deceptive else None,
        "deceptive": [pid for pid, d in zip(ids, deceptive) if d],
    }
    return Fixture(ds, manifest)


def separated_on_first_feature(n_per_cluster: int = 6, p: int = 5, seed: int = 0) -> np.ndarray:
    """Two groups that differ only in feature 0; other columns are shared noise.

    Row ``i`` and row ``i + n_per_cluster`` are identical except in column 0.
    """
    rng = np.random.default_rng(seed)
    shared = rng.uniform(1.0, 2.0, (n_per_cluster, p - 1))
    first = np.r_[np.full(n_per_cluster, 0.1), np.full(n_per_cluster, 20.0)]
    first = first + rng.uniform(0, 0.01, 2 * n_per_cluster)
    return np.column_stack([first, np.vstack([shared, shared])])
