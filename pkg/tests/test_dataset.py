import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rfclust.dataset import (
    Dataset, DatasetError, drop_constant_columns, load_dataset, load_json,
    log_transform_targets, lopo_folds, save_json, write_dataset,
)


def _write(path, header, rows):
    path.write_text("\n".join([",".join(header)] + [",".join(map(str, r)) for r in rows]) + "\n")


@pytest.fixture
def thirty_by_sixty_four(tmp_path):
    rng = np.random.default_rng(0)
    names = [f"ela_{j}" for j in range(64)]
    X = rng.normal(size=(30, 64))
    Y = rng.normal(size=(30, 3))
    _write(tmp_path / "f.csv", ["f_id", *names],
           [[i + 1, *(repr(float(v)) for v in row)] for i, row in enumerate(X)])
    _write(tmp_path / "t.csv", ["f_id", "DE1", "DE2", "DE3"],
           [[i + 1, *(repr(float(v)) for v in row)] for i, row in enumerate(Y)])
    return tmp_path / "f.csv", tmp_path / "t.csv", X, Y


def test_load_thirty_by_sixty_four(thirty_by_sixty_four):
    f, t, X, Y = thirty_by_sixty_four
    ds = load_dataset(f, t)
    assert (ds.n_problems, ds.n_features) == (30, 64)
    assert ds.feature_names[:2] == ("ela_0", "ela_1")
    np.testing.assert_array_equal(ds.features, X)
    np.testing.assert_array_equal(ds.target("DE3"), Y[:, 2])


def test_targets_reordered_to_feature_order(tmp_path):
    _write(tmp_path / "f.csv", ["f_id", "a"], [[1, 0.5], [2, 1.5]])
    _write(tmp_path / "t.csv", ["f_id", "DE1"], [[2, 20.0], [1, 10.0]])
    ds = load_dataset(tmp_path / "f.csv", tmp_path / "t.csv")
    assert ds.target("DE1").tolist() == [10.0, 20.0]


def test_single_problem_rejected(tmp_path):
    _write(tmp_path / "f.csv", ["f_id", "a"], [[1, 0.5]])
    _write(tmp_path / "t.csv", ["f_id", "DE1"], [[1, 1.0]])
    with pytest.raises(DatasetError, match="need >= 2 problems for LOPO"):
        load_dataset(tmp_path / "f.csv", tmp_path / "t.csv")


def test_nan_cell_named(tmp_path):
    _write(tmp_path / "f.csv", ["f_id", "ela_meta.lin_simple.adj_r2", "b"],
           [["f1", 1, 2], ["f3", "nan", 2], ["f4", 1, 3]])
    _write(tmp_path / "t.csv", ["f_id", "DE1"], [["f1", 0], ["f3", 0], ["f4", 0]])
    with pytest.raises(DatasetError, match=r"\(f3, ela_meta.lin_simple.adj_r2\)"):
        load_dataset(tmp_path / "f.csv", tmp_path / "t.csv")


@pytest.mark.parametrize("rows, message", [
    ([[1, "x"], [2, 1]], "non-numeric"),
    ([[1, 1], [1, 2]], "duplicate problem ids"),
    ([[1, "inf"], [2, 1]], "non-finite"),
])
def test_bad_feature_cells(tmp_path, rows, message):
    _write(tmp_path / "f.csv", ["f_id", "a"], rows)
    _write(tmp_path / "t.csv", ["f_id", "DE1"], [[1, 0], [2, 0]])
    with pytest.raises(DatasetError, match=message):
        load_dataset(tmp_path / "f.csv", tmp_path / "t.csv")


def test_missing_target_row(tmp_path):
    _write(tmp_path / "f.csv", ["f_id", "a"], [[1, 1], [2, 2], [3, 3]])
    _write(tmp_path / "t.csv", ["f_id", "DE1"], [[1, 0], [2, 0]])
    with pytest.raises(DatasetError, match="missing targets"):
        load_dataset(tmp_path / "f.csv", tmp_path / "t.csv")


def test_wrong_id_column(tmp_path):
    _write(tmp_path / "f.csv", ["id", "a"], [[1, 1], [2, 2]])
    _write(tmp_path / "t.csv", ["f_id", "DE1"], [[1, 0], [2, 0]])
    with pytest.raises(DatasetError, match="f_id"):
        load_dataset(tmp_path / "f.csv", tmp_path / "t.csv")


def test_missing_file(tmp_path):
    with pytest.raises(DatasetError, match="not found"):
        load_dataset(tmp_path / "nope.csv", tmp_path / "t.csv")


def test_raw_precision_option(tmp_path):
    _write(tmp_path / "f.csv", ["f_id", "a"], [[1, 1], [2, 2]])
    _write(tmp_path / "t.csv", ["f_id", "DE1"], [[1, 100.0], [2, 0.0]])
    ds = load_dataset(tmp_path / "f.csv", tmp_path / "t.csv", raw_precision=True)
    assert ds.target("DE1").tolist() == [2.0, -12.0]


@pytest.mark.parametrize("raw, floor, expected", [
    ([1.0], None, [0.0]),
    ([100.0, 0.001], None, [2.0, -3.0]),
    ([0.0], 1e-12, [-12.0]),
])
def test_log_transform(raw, floor, expected):
    np.testing.assert_allclose(log_transform_targets(raw, floor), expected, rtol=0, atol=1e-15)


def test_log_transform_rejects_nonpositive():
    with pytest.raises(DatasetError):
        log_transform_targets([1.0, 0.0])
    with pytest.raises(DatasetError):
        log_transform_targets([-1.0])


def _toy(n, p=3):
    return Dataset([str(i) for i in range(n)], [f"x{j}" for j in range(p)],
                   np.arange(n * p, dtype=float).reshape(n, p), {"A": np.zeros(n)})


def test_lopo_folds_thirty():
    folds = lopo_folds(_toy(30))
    assert len(folds) == 30
    assert [f.test_problem for f in folds] == [str(i) for i in range(30)]


def test_lopo_folds_two():
    folds = lopo_folds(_toy(2))
    assert [f.train_problems for f in folds] == [("1",), ("0",)]


def test_lopo_folds_five_counts():
    ds = _toy(5)
    folds = lopo_folds(ds)
    for pid in ds.problem_ids:
        assert sum(f.test_problem == pid for f in folds) == 1
        assert sum(pid in f.train_problems for f in folds) == 4
    for f in folds:
        assert f.test_problem not in f.train_problems
        assert set(f.train_problems) | {f.test_problem} == set(ds.problem_ids)


def test_lopo_folds_need_two():
    ds = Dataset(["a"], ["x"], [[1.0]], {"A": [0.0]})
    with pytest.raises(DatasetError):
        lopo_folds(ds)


def test_dataset_is_immutable():
    ds = _toy(3)
    with pytest.raises(ValueError):
        ds.features[0, 0] = 5.0


def test_drop_constant_columns():
    X = np.array([[1.0, 2.0, 3.0], [1.0, 5.0, 3.0]])
    keep, dropped = drop_constant_columns(X, ["a", "b", "c"])
    assert keep.tolist() == [1]
    assert dropped == ["a", "c"]


finite = st.floats(-1e6, 1e6, allow_nan=False, width=64)


@settings(max_examples=25, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(2, 6), st.integers(1, 4)), elements=finite),
       st.data())
def test_csv_round_trip(tmp_path_factory, X, data):
    n = X.shape[0]
    y = data.draw(arrays(np.float64, n, elements=finite))
    ds = Dataset([f"p{i}" for i in range(n)], [f"c{j}" for j in range(X.shape[1])], X,
                 {"DE1": y})
    d = tmp_path_factory.mktemp("rt")
    write_dataset(ds, d / "f.csv", d / "t.csv")
    again = load_dataset(d / "f.csv", d / "t.csv")
    assert again == ds
    write_dataset(again, d / "f2.csv", d / "t2.csv")
    assert (d / "f.csv").read_bytes() == (d / "f2.csv").read_bytes()


def test_json_round_trip(tmp_path):
    ds = _toy(4)
    save_json(ds, tmp_path / "d.json")
    assert load_json(tmp_path / "d.json") == ds
    assert set(json.loads((tmp_path / "d.json").read_text())) == {
        "problem_ids", "feature_names", "features", "targets"}
