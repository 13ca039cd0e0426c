"""Report files for a finished LOPO run.

Layout written by :func:`emit_reports`::

    summary.csv            MAE per (variant, threshold)
    heatmap.csv            per-problem error and neighbor count
    weights.csv            long table: fold, feature, method, weight
    similarity_pairs.csv   test vs training similarity and target gap
    folds/fold_<id>.json   everything computed in one fold
    *.svg                  optional renderings

No timestamps or absolute paths are written, so identical runs give
byte-identical files.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .harness import VARIANT_LABELS, RunSummary

SCHEMA_VERSION = 1


def _num(x) -> str:
    if x is None or (isinstance(x, float) and np.isnan(x)):
        return ""
    return repr(float(x))


def _thr(t) -> str:
    return "" if t is None else repr(float(t))


def _writer(path):
    fh = open(path, "w", newline="", encoding="utf-8")
    fh.write(f"# schema_version: {SCHEMA_VERSION}\n")
    return fh, csv.writer(fh, lineterminator="\n")


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    """Read a report CSV, skipping comment lines."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    return rows[0], rows[1:]


def write_summary(summary: RunSummary, path) -> None:
    """MAE table: one row per model and threshold, one column per algorithm."""
    fh, w = _writer(path)
    with fh:
        w.writerow(["model", "variant", "s", summary.config.algorithm_id])
        for variant, thr in summary.row_keys():
            w.writerow([VARIANT_LABELS[variant], variant, _thr(thr),
                        _num(summary.mae(variant, thr))])


def write_heatmap(summary: RunSummary, path) -> None:
    """One row per (variant, threshold); each problem gets an error and a k column."""
    fh, w = _writer(path)
    with fh:
        header = ["variant", "s"]
        for pid in summary.problem_ids:
            header += [f"err_{pid}", f"k_{pid}"]
        w.writerow(header)
        for variant, thr in summary.row_keys():
            errs = summary.errors(variant, thr)
            ks = summary.neighbor_counts(variant, thr)
            row = [variant, _thr(thr)]
            for e, k in zip(errs, ks):
                row += [_num(e), "" if variant == "rf" else str(int(k))]
            w.writerow(row)


def write_weights(summary: RunSummary, path) -> None:
    fh, w = _writer(path)
    with fh:
        w.writerow(["fold", "feature", "method", "weight"])
        for fold in summary.folds:
            for method, table in fold.weights_dict().items():
                for name, weight in table.items():
                    w.writerow([fold.test_problem, name, method, _num(weight)])


def write_similarity_pairs(summary: RunSummary, path) -> None:
    truth = dict(zip(summary.problem_ids, summary.truth.tolist()))
    fh, w = _writer(path)
    with fh:
        w.writerow(["test_problem", "train_problem", "method", "similarity", "abs_target_diff"])
        for fold in summary.folds:
            for method, sims in fold.similarities.items():
                for pid, s in zip(fold.train_problems, sims):
                    w.writerow([fold.test_problem, pid, method, _num(s),
                                _num(abs(truth[pid] - fold.truth))])


def write_folds(summary: RunSummary, folds_dir) -> None:
    folds_dir = Path(folds_dir)
    folds_dir.mkdir(parents=True, exist_ok=True)
    for fold in summary.folds:
        path = folds_dir / f"fold_{fold.test_problem}.json"
        path.write_text(json.dumps(fold.to_dict(), indent=1, sort_keys=True) + "\n",
                        encoding="utf-8")


def emit_reports(summary: RunSummary, out_dir, svg: bool = False) -> list[Path]:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    write_summary(summary, out / "summary.csv")
    write_heatmap(summary, out / "heatmap.csv")
    write_weights(summary, out / "weights.csv")
    write_similarity_pairs(summary, out / "similarity_pairs.csv")
    write_folds(summary, out / "folds")
    (out / "config.json").write_text(
        json.dumps(_config_json(summary), indent=1, sort_keys=True) + "\n", encoding="utf-8")
    if svg:
        render_svgs(out)
    return sorted(p for p in out.rglob("*") if p.is_file())


def _config_json(summary: RunSummary) -> dict:
    cfg = asdict(summary.config)
    cfg["thresholds"] = list(cfg["thresholds"])
    cfg["variants"] = list(cfg["variants"])
    return cfg


# -- rendering ---------------------------------------------------------------

def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    plt.rcParams["svg.hashsalt"] = "rfclust"
    return plt


def render_heatmap_svg(heatmap_csv, out_path) -> None:
    header, rows = read_csv(heatmap_csv)
    pids = [h[4:] for h in header[2::2]]
    labels = [f"{r[0]} {r[1]}".strip() for r in rows]
    err = np.array([[float(c) if c else np.nan for c in r[2::2]] for r in rows])
    ks = [r[3::2] for r in rows]
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(max(6, 0.45 * len(pids)), 0.5 * len(rows) + 1.5))
    im = ax.imshow(err, cmap="Reds", aspect="auto")
    for i, row in enumerate(ks):
        for j, k in enumerate(row):
            text = f"{err[i, j]:.2f}" + (f"\n{k}" if k else "")
            ax.text(j, i, text, ha="center", va="center", fontsize=5)
    ax.set_xticks(range(len(pids)), pids, fontsize=6)
    ax.set_yticks(range(len(labels)), labels, fontsize=6)
    ax.set_xlabel("f_id")
    fig.colorbar(im, ax=ax, label="absolute error")
    fig.tight_layout()
    fig.savefig(out_path, format="svg", metadata={"Date": None})
    plt.close(fig)


def render_weights_svg(weights_csv, out_dir) -> list[Path]:
    _, rows = read_csv(weights_csv)
    plt = _pyplot()
    written = []
    for method in sorted({r[2] for r in rows}):
        by_feature: dict[str, list[float]] = {}
        for fold, feature, m, weight in rows:
            if m == method:
                by_feature.setdefault(feature, []).append(float(weight))
        names = sorted(by_feature)
        fig, ax = plt.subplots(figsize=(max(6, 0.35 * len(names)), 4))
        ax.boxplot([by_feature[n] for n in names])
        ax.set_xticks(range(1, len(names) + 1),
                      [f"{n} ({len(by_feature[n])})" for n in names],
                      rotation=90, fontsize=6)
        ax.set_ylabel("weight")
        ax.set_title(f"feature weights over folds: {method}")
        fig.tight_layout()
        path = Path(out_dir) / f"weights_{method}.svg"
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        written.append(path)
    return written


def render_svgs(out_dir) -> list[Path]:
    """Regenerate every SVG from the CSVs already in ``out_dir``."""
    out = Path(out_dir)
    written = []
    if (out / "heatmap.csv").exists():
        render_heatmap_svg(out / "heatmap.csv", out / "heatmap.svg")
        written.append(out / "heatmap.svg")
    if (out / "weights.csv").exists():
        written += render_weights_svg(out / "weights.csv", out)
    return written

