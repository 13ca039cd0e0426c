"""Dataset ingestion, validation and leave-one-problem-out fold construction."""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

logger = logging.getLogger(__name__)

ID_COLUMN = "f_id"
DEFAULT_PRECISION_FLOOR = 1e-12


class DatasetError(ValueError):
    """Raised when input data violates the dataset contract."""


@dataclass(frozen=True)
class Dataset:
    """Feature matrix and per-algorithm performance targets keyed by problem id.

    Targets are log10 of the median precision reached by each algorithm.
    Instances are validated on construction and treated as immutable.
    """

    problem_ids: tuple[str, ...]
    feature_names: tuple[str, ...]
    features: np.ndarray
    targets: Mapping[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        ids = tuple(str(i) for i in self.problem_ids)
        names = tuple(str(n) for n in self.feature_names)
        X = np.array(self.features, dtype=np.float64)
        if X.ndim != 2:
            raise DatasetError("features must be a 2-D matrix")
        if X.shape != (len(ids), len(names)):
            raise DatasetError(
                f"feature matrix shape {X.shape} does not match "
                f"{len(ids)} problems x {len(names)} features"
            )
        seen = set()
        for pid in ids:
            if pid in seen:
                raise DatasetError(f"duplicate problem id {pid!r}")
            seen.add(pid)
        if len(set(names)) != len(names):
            raise DatasetError("duplicate feature names")
        bad = np.argwhere(~np.isfinite(X))
        if len(bad):
            r, c = bad[0]
            raise DatasetError(
                f"non-finite feature value at ({ids[r]}, {names[c]})"
            )
        targets = {}
        for algo, values in self.targets.items():
            y = np.array(values, dtype=np.float64)
            if y.shape != (len(ids),):
                raise DatasetError(
                    f"target {algo!r} has {y.size} values for {len(ids)} problems"
                )
            bad = np.flatnonzero(~np.isfinite(y))
            if len(bad):
                raise DatasetError(
                    f"non-finite target value at ({ids[bad[0]]}, {algo})"
                )
            y.setflags(write=False)
            targets[str(algo)] = y
        X.setflags(write=False)
        object.__setattr__(self, "problem_ids", ids)
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "targets", targets)

    @property
    def n_problems(self) -> int:
        return len(self.problem_ids)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def target(self, algorithm_id: str) -> np.ndarray:
        try:
            return self.targets[algorithm_id]
        except KeyError:
            raise DatasetError(
                f"unknown algorithm {algorithm_id!r}; "
                f"available: {', '.join(self.targets)}"
            ) from None

    def index_of(self, problem_id) -> int:
        return self.problem_ids.index(str(problem_id))

    def with_features(self, features: np.ndarray) -> "Dataset":
        return Dataset(self.problem_ids, self.feature_names, features, self.targets)

    def to_dict(self) -> dict:
        return {
            "problem_ids": list(self.problem_ids),
            "feature_names": list(self.feature_names),
            "features": self.features.tolist(),
            "targets": {k: v.tolist() for k, v in self.targets.items()},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Dataset":
        return cls(
            data["problem_ids"], data["feature_names"], data["features"],
            data.get("targets", {}),
        )

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.problem_ids == other.problem_ids
            and self.feature_names == other.feature_names
            and np.array_equal(self.features, other.features)
            and self.targets.keys() == other.targets.keys()
            and all(np.array_equal(v, other.targets[k]) for k, v in self.targets.items())
        )

    __hash__ = None


@dataclass(frozen=True)
class FoldSpec:
    test_problem: str
    train_problems: tuple[str, ...]


def _read_table(path) -> tuple[list[str], list[str], list[list[str]]]:
    """Read an id-keyed CSV; lines starting with '#' are comments."""
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows:
        raise DatasetError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if header[0] != ID_COLUMN:
        raise DatasetError(
            f"{path}: first column must be {ID_COLUMN!r}, got {header[0]!r}"
        )
    ids, cells = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise DatasetError(
                f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}"
            )
        pid = row[0].strip()
        if not pid:
            raise DatasetError(f"{path}:{lineno}: missing problem id")
        ids.append(pid)
        cells.append(row[1:])
    return header[1:], ids, cells


def _parse_matrix(path, columns, ids, cells) -> np.ndarray:
    out = np.empty((len(ids), len(columns)))
    for r, row in enumerate(cells):
        for c, cell in enumerate(row):
            try:
                value = float(cell)
            except ValueError:
                raise DatasetError(
                    f"{path}: non-numeric value {cell!r} at ({ids[r]}, {columns[c]})"
                ) from None
            if not math.isfinite(value):
                raise DatasetError(
                    f"{path}: non-finite value {cell!r} at ({ids[r]}, {columns[c]})"
                )
            out[r, c] = value
    return out


def load_dataset(features_path, targets_path, *, raw_precision: bool = False,
                 precision_floor: float = DEFAULT_PRECISION_FLOOR) -> Dataset:
    """Load a features CSV and a targets CSV keyed by ``f_id``.

    Parameters
    ----------
    features_path, targets_path : path-like
        CSV files whose first column is the problem id. Every other column of
        the targets file is one algorithm.
    raw_precision : bool
        If True the target cells hold raw median precisions and are passed
        through :func:`log_transform_targets` with ``precision_floor``.

    Returns
    -------
    Dataset
        Feature column order is preserved from the file; problem order
        follows the features file.
    """
    feat_cols, feat_ids, feat_cells = _read_table(features_path)
    targ_cols, targ_ids, targ_cells = _read_table(targets_path)
    for path, ids in ((features_path, feat_ids), (targets_path, targ_ids)):
        dup = sorted({i for i in ids if ids.count(i) > 1})
        if dup:
            raise DatasetError(f"{path}: duplicate problem ids {dup}")
    X = _parse_matrix(features_path, feat_cols, feat_ids, feat_cells)
    Y = _parse_matrix(targets_path, targ_cols, targ_ids, targ_cells)
    missing = [i for i in feat_ids if i not in set(targ_ids)]
    if missing:
        raise DatasetError(f"{targets_path}: missing targets for problems {missing}")
    extra = [i for i in targ_ids if i not in set(feat_ids)]
    if extra:
        raise DatasetError(f"{targets_path}: targets for unknown problems {extra}")
    if len(feat_ids) < 2:
        raise DatasetError("need >= 2 problems for LOPO")
    order = [targ_ids.index(i) for i in feat_ids]
    targets = {}
    for c, algo in enumerate(targ_cols):
        y = Y[order, c]
        if raw_precision:
            y = log_transform_targets(y, floor=precision_floor)
        targets[algo] = y
    return Dataset(feat_ids, feat_cols, X, targets)


def _fmt(x: float) -> str:
    return repr(float(x))


def write_dataset(dataset: Dataset, features_path, targets_path) -> None:
    """Write the two CSV files read by :func:`load_dataset` (lossless floats)."""
    with open(features_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([ID_COLUMN, *dataset.feature_names])
        for pid, row in zip(dataset.problem_ids, dataset.features):
            w.writerow([pid, *map(_fmt, row)])
    algos = list(dataset.targets)
    with open(targets_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([ID_COLUMN, *algos])
        for r, pid in enumerate(dataset.problem_ids):
            w.writerow([pid, *(_fmt(dataset.targets[a][r]) for a in algos)])


def save_json(dataset: Dataset, path) -> None:
    Path(path).write_text(json.dumps(dataset.to_dict(), indent=1) + "\n", encoding="utf-8")


def load_json(path) -> Dataset:
    return Dataset.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def log_transform_targets(raw_precisions: Sequence[float],
                          floor: float | None = None) -> np.ndarray:
    """Return ``log10(max(raw, floor))`` elementwise.

    Without a floor every entry must be strictly positive.
    """
    raw = np.asarray(raw_precisions, dtype=np.float64)
    if floor is None:
        if np.any(raw <= 0):
            raise DatasetError("nonpositive precision and no floor configured")
        return np.log10(raw)
    if not floor > 0:
        raise DatasetError("precision floor must be > 0")
    return np.log10(np.maximum(raw, floor))


def lopo_folds(dataset: Dataset) -> list[FoldSpec]:
    """One fold per problem, in dataset order, with that problem held out."""
    ids = dataset.problem_ids
    if len(ids) < 2:
        raise DatasetError("need >= 2 problems for LOPO")
    return [
        FoldSpec(pid, tuple(j for j in ids if j != pid))
        for pid in ids
    ]


def drop_constant_columns(X_train: np.ndarray, names: Sequence[str]
                          ) -> tuple[np.ndarray, list[str]]:
    """Indices of columns that vary across the training rows, and names dropped.

    Cosine and Pearson both degenerate on constant columns.
    """
    X_train = np.asarray(X_train)
    varying = np.ptp(X_train, axis=0) > 0
    dropped = [n for n, v in zip(names, varying) if not v]
    if dropped:
        logger.warning("dropping %d zero-variance feature(s): %s",
                       len(dropped), ", ".join(dropped))
    return np.flatnonzero(varying), dropped
