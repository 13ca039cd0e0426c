import math
import warnings

import numpy as np
import pytest

from rfclust.forest import Forest, ForestParams, Tree, fit, mae, oob_mae, predict


def _leaf(value):
    return Tree(np.array([-1]), np.array([0.0]), np.array([-1]), np.array([-1]),
                np.array([float(value)]))


def _stump(threshold, left, right, feature=0):
    return Tree(np.array([feature, -1, -1]), np.array([threshold, 0.0, 0.0]),
                np.array([1, -1, -1]), np.array([2, -1, -1]),
                np.array([(left + right) / 2, left, right]))


def _forest(trees, masks=None, n_rows=1, p=1):
    masks = masks or [np.zeros(n_rows, dtype=bool) for _ in trees]
    return Forest(tuple(trees), tuple(np.asarray(m) for m in masks), ForestParams(), p)


def test_constant_target():
    X = np.random.default_rng(0).normal(size=(15, 3))
    f = fit(X, np.full(15, 2.5))
    assert np.all(f.predict(np.random.default_rng(1).normal(size=(7, 3))) == 2.5)


def test_grid_beats_mean_predictor():
    x = np.arange(20.0)[:, None]
    y = np.arange(20.0)
    f = fit(x, y, ForestParams(n_trees=100))
    mean_predictor_mae = 5.0  # mean |i - 9.5| over i = 0..19
    assert mae(f.predict(x), y) < mean_predictor_mae


def test_fit_is_deterministic():
    rng = np.random.default_rng(3)
    X, y = rng.normal(size=(25, 4)), rng.normal(size=25)
    a = fit(X, y, ForestParams(seed=11))
    b = fit(X, y, ForestParams(seed=11))
    Xq = rng.normal(size=(10, 4))
    assert a.predict(Xq).tobytes() == b.predict(Xq).tobytes()
    assert a.to_json() == b.to_json()
    c = fit(X, y, ForestParams(seed=12))
    assert c.to_json() != a.to_json()


def test_row_order_invariance():
    rng = np.random.default_rng(4)
    X, y = rng.normal(size=(20, 3)), rng.normal(size=20)
    perm = rng.permutation(20)
    Xq = rng.normal(size=(30, 3))
    a = fit(X, y)
    b = fit(X[perm], y[perm])
    assert a.predict(Xq).tobytes() == b.predict(Xq).tobytes()
    # OOB masks follow the rows they belong to
    assert all(np.array_equal(ma[perm], mb) for ma, mb in zip(a.oob_masks, b.oob_masks))


def test_stump_prediction():
    f = _forest([_stump(0.0, -3.0, 4.0)])
    assert predict(f, np.array([-1.0])) == -3.0
    assert predict(f, np.array([0.0])) == -3.0  # x <= threshold goes left
    assert predict(f, np.array([0.5])) == 4.0


def test_identical_trees_equal_single_tree():
    one = _forest([_stump(1.0, 0.0, 10.0)])
    many = _forest([_stump(1.0, 0.0, 10.0)] * 5)
    X = np.linspace(-2, 3, 11)[:, None]
    np.testing.assert_array_equal(one.predict(X), many.predict(X))


def test_ensemble_mean():
    f = _forest([_leaf(1.0), _leaf(3.0)])
    assert predict(f, np.array([0.0])) == 2.0


def test_predict_dimension_mismatch():
    f = fit(np.random.default_rng(0).normal(size=(5, 2)), np.arange(5.0))
    with pytest.raises(ValueError):
        f.predict(np.zeros((1, 3)))


def test_oob_mae_constant():
    X = np.random.default_rng(0).normal(size=(12, 2))
    f = fit(X, np.full(12, -1.0))
    assert oob_mae(f, X, np.full(12, -1.0)) == 0.0


def test_oob_mae_hand_masks():
    masks = [[True, False, False], [True, True, False], [False, False, True]]
    f = _forest([_leaf(1.0), _leaf(2.0), _leaf(3.0)], [np.array(m) for m in masks], n_rows=3)
    # row0: mean(1, 2) = 1.5, row1: 2, row2: 3
    assert oob_mae(f, np.zeros((3, 1)), np.zeros(3)) == pytest.approx((1.5 + 2 + 3) / 3, abs=1e-15)


def test_oob_mae_skips_never_oob_rows():
    masks = [[True, False], [True, False]]
    f = _forest([_leaf(1.0), _leaf(3.0)], [np.array(m) for m in masks], n_rows=2)
    with pytest.warns(RuntimeWarning, match="never out-of-bag"):
        assert oob_mae(f, np.zeros((2, 1)), np.zeros(2)) == 2.0


def test_oob_mae_all_in_bag():
    f = _forest([_leaf(1.0)], [np.zeros(3, dtype=bool)], n_rows=3)
    with pytest.raises(ValueError):
        oob_mae(f, np.zeros((3, 1)), np.zeros(3))


def test_oob_mae_requires_bootstrap():
    X = np.arange(6.0)[:, None]
    f = fit(X, np.arange(6.0), ForestParams(bootstrap=False, n_trees=3))
    with pytest.raises(ValueError, match="bootstrap"):
        oob_mae(f, X, np.arange(6.0))


def test_mae_examples():
    assert mae([1, 2], [1, 2]) == 0
    assert mae([0, 4], [1, 1]) == 2.0
    with pytest.raises(ValueError):
        mae([1, 2], [1])


def test_mae_matches_compensated_sum():
    rng = np.random.default_rng(5)
    for _ in range(20):
        a, b = rng.normal(size=100) * 1e3, rng.normal(size=100) * 1e3
        oracle = math.fsum(abs(x - y) for x, y in zip(a, b)) / 100
        assert abs(mae(a, b) - oracle) < 1e-12 * max(1.0, oracle)


def test_full_depth_trees_interpolate_in_bag_rows():
    rng = np.random.default_rng(6)
    X, y = rng.normal(size=(18, 3)), rng.normal(size=18)
    f = fit(X, y, ForestParams(n_trees=10))
    for tree, oob in zip(f.trees, f.oob_masks):
        inbag = ~oob
        np.testing.assert_array_equal(tree.predict(X[inbag]), y[inbag])


def test_predictions_within_target_range():
    rng = np.random.default_rng(7)
    X, y = rng.normal(size=(20, 4)), rng.normal(size=20)
    p = fit(X, y).predict(rng.normal(size=(200, 4)) * 5)
    assert p.min() >= y.min() and p.max() <= y.max()


def test_leaves_respect_min_samples_leaf():
    rng = np.random.default_rng(8)
    X, y = rng.normal(size=(40, 2)), rng.normal(size=40)
    params = ForestParams(n_trees=5, min_samples_leaf=4, bootstrap=False)
    f = fit(X, y, params)
    for tree in f.trees:
        # route training rows and count per leaf
        leaves = np.zeros(tree.n_nodes, dtype=int)
        for row in X:
            node = 0
            while tree.feature[node] >= 0:
                node = tree.left[node] if row[tree.feature[node]] <= tree.threshold[node] else tree.right[node]
            leaves[node] += 1
        assert leaves[tree.feature < 0].min() >= 4


def test_thresholds_are_midpoints():
    X = np.array([[0.0], [1.0], [3.0], [7.0]])
    f = fit(X, np.array([0.0, 0.0, 5.0, 5.0]), ForestParams(n_trees=1, bootstrap=False))
    t = f.trees[0]
    assert t.feature[0] == 0 and t.threshold[0] == 2.0


def test_gain_tie_goes_to_lowest_feature():
    X = np.array([[0.0, 0.0], [1.0, 1.0]])
    f = fit(X, np.array([0.0, 1.0]), ForestParams(n_trees=1, bootstrap=False))
    assert f.trees[0].feature[0] == 0


def test_max_depth_and_max_features():
    rng = np.random.default_rng(9)
    X, y = rng.normal(size=(30, 5)), rng.normal(size=30)
    f = fit(X, y, ForestParams(n_trees=3, max_depth=1))
    assert all(t.n_nodes <= 3 for t in f.trees)
    g = fit(X, y, ForestParams(n_trees=20, max_features=0.4, seed=3))
    h = fit(X, y, ForestParams(n_trees=20, max_features=0.4, seed=3))
    assert g.to_json() == h.to_json()


def test_json_round_trip(tmp_path):
    rng = np.random.default_rng(10)
    X, y = rng.normal(size=(15, 3)), rng.normal(size=15)
    f = fit(X, y, ForestParams(n_trees=7))
    f.save(tmp_path / "model.json")
    g = Forest.load(tmp_path / "model.json")
    np.testing.assert_array_equal(f.predict(X), g.predict(X))
    assert g.sha256() == f.sha256()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        assert oob_mae(g, X, y) == oob_mae(f, X, y)


@pytest.mark.parametrize("X, y", [
    (np.zeros((0, 2)), np.zeros(0)),
    (np.zeros((3, 2)), np.zeros(2)),
    (np.array([[1.0, np.nan], [2.0, 3.0]]), np.zeros(2)),
])
def test_fit_rejects_bad_input(X, y):
    with pytest.raises(ValueError):
        fit(X, y)


def test_params_validation():
    with pytest.raises(ValueError):
        ForestParams(n_trees=0)
    with pytest.raises(ValueError):
        ForestParams(min_samples_leaf=0)
    with pytest.raises(ValueError):
        ForestParams(max_features=0.0)


def _reference_tree(X, y, rows, min_leaf=1):
    """Plain recursive CART: lowest feature, then lowest threshold wins gain ties."""
    ys = y[rows]
    if ys.min() == ys.max() or len(rows) < 2:
        return ("leaf", ys[0] if ys.min() == ys.max() else ys.mean())
    best = None
    parent = ((ys - ys.mean()) ** 2).sum()
    for f in range(X.shape[1]):
        values = sorted(set(X[rows, f]))
        for a, b in zip(values, values[1:]):
            t = (a + b) / 2
            left = rows[X[rows, f] <= t]
            right = rows[X[rows, f] > t]
            if len(left) < min_leaf or len(right) < min_leaf:
                continue
            sse = ((y[left] - y[left].mean()) ** 2).sum() + ((y[right] - y[right].mean()) ** 2).sum()
            if best is None or sse < best[0] - 1e-12 * max(parent, 1.0):
                best = (sse, f, t, left, right)
    if best is None:
        return ("leaf", ys.mean())
    _, f, t, left, right = best
    return ("split", f, t, _reference_tree(X, y, left, min_leaf), _reference_tree(X, y, right, min_leaf))


def _reference_predict(node, x):
    while node[0] == "split":
        node = node[3] if x[node[1]] <= node[2] else node[4]
    return node[1]


@pytest.mark.parametrize("seed", range(5))
def test_single_tree_matches_reference_cart(seed):
    rng = np.random.default_rng(100 + seed)
    X, y = rng.normal(size=(25, 3)), rng.normal(size=25)
    ours = fit(X, y, ForestParams(n_trees=1, bootstrap=False))
    ref = _reference_tree(X, y, np.arange(25))
    Xq = rng.normal(size=(300, 3)) * 1.5
    expected = np.array([_reference_predict(ref, x) for x in Xq])
    np.testing.assert_allclose(ours.predict(Xq), expected, rtol=0, atol=1e-12)
