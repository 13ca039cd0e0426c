import itertools

import numpy as np
import pytest

from rfclust.fixtures import FixtureSpec, generate, separated_on_first_feature
from rfclust.importance import unsupervised_importance
from rfclust.selection import build_correlation_graph, correlated_groups, pearson
from rfclust.similarity import similarity_row


def test_layout_and_manifest():
    fx = generate(FixtureSpec(seed=1))
    ds, man = fx.dataset, fx.manifest
    assert ds.n_problems == 30
    assert ds.n_features == 3 + 2 + 14
    assert man["relevant"] == ["rel_0", "rel_1", "rel_2"]
    assert set(man["cluster_labels"].values()) == {0, 1, 2, 3}
    assert man["marker"] is None and man["deceptive"] == []


def test_copies_form_a_clique():
    ds = generate(FixtureSpec(n_correlated_copies=3, seed=2)).dataset
    X = ds.features
    copy_cols = [0] + [ds.feature_names.index(f"copy_{j}") for j in range(3)]
    for a, b in itertools.combinations(copy_cols, 2):
        assert abs(pearson(X[:, a], X[:, b])) > 0.9
    groups = correlated_groups(build_correlation_graph(X))
    assert any(len(g) >= 3 and set(copy_cols) <= set(g) for g in groups)


def test_nearest_neighbor_shares_cluster_target():
    spec = FixtureSpec(seed=4, target_spread=0.5)
    fx = generate(spec)
    X, y = fx.dataset.features, fx.dataset.target("DE1")
    rel = [fx.dataset.feature_names.index(f) for f in fx.manifest["relevant"]]
    w = np.zeros(X.shape[1])
    w[rel] = 1.0
    for i in range(len(X)):
        others = np.delete(np.arange(len(X)), i)
        s = similarity_row(X[i], X[others], w)
        j = others[int(np.argmax(s))]
        assert abs(y[i] - y[j]) < spec.target_spread


def test_same_seed_same_bytes(tmp_path):
    generate(FixtureSpec(seed=7)).write(tmp_path / "a")
    generate(FixtureSpec(seed=7)).write(tmp_path / "b")
    for name in ("features.csv", "targets.csv", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    generate(FixtureSpec(seed=8)).write(tmp_path / "c")
    assert (tmp_path / "a" / "features.csv").read_bytes() != \
        (tmp_path / "c" / "features.csv").read_bytes()


def test_relevant_outweigh_nuisance():
    # without copies: a copy would stand in for its removed original
    fx = generate(FixtureSpec(seed=0, n_correlated_copies=0))
    ds = fx.dataset
    w = unsupervised_importance(ds.features, m=4).weights
    rel = [ds.feature_names.index(f) for f in fx.manifest["relevant"]]
    nuis = [ds.feature_names.index(f) for f in fx.manifest["nuisance"]]
    assert w[rel].min() > w[nuis].max()
    assert np.all(w[nuis] == 0)


def test_deceptive_problems_marked():
    fx = generate(FixtureSpec(deceptive_fraction=0.2, seed=0))
    ds, man = fx.dataset, fx.manifest
    assert len(man["deceptive"]) == 6
    marker = ds.features[:, ds.feature_names.index("marker")]
    y = ds.target("DE1")
    for pid in ds.problem_ids:
        i = ds.index_of(pid)
        assert marker[i] == (1.0 if pid in man["deceptive"] else 0.0)
    normal = [ds.index_of(p) for p in ds.problem_ids if p not in man["deceptive"]]
    assert y[[ds.index_of(p) for p in man["deceptive"]]].min() > y[normal].max()


@pytest.mark.parametrize("kwargs", [
    dict(n_clusters=1), dict(deceptive_fraction=1.5), dict(p_relevant=1, n_clusters=4),
    dict(n_problems=5), dict(target_spread=-1.0),
])
def test_spec_validation(kwargs):
    with pytest.raises(ValueError):
        generate(FixtureSpec(**kwargs))


def test_separated_on_first_feature_shape():
    X = separated_on_first_feature(n_per_cluster=4, p=3)
    assert X.shape == (8, 3)
    np.testing.assert_array_equal(X[:4, 1:], X[4:, 1:])
    assert X[:4, 0].max() < 1 and X[4:, 0].min() > 10
