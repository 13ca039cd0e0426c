"""Command-line entry point.

Exit codes: 0 success, 1 invalid input or configuration, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import fields
from pathlib import Path

from .dataset import DatasetError, drop_constant_columns, load_dataset, lopo_folds
from .fixtures import FixtureSpec, generate
from .harness import VARIANTS, RunConfig, run_fold, run_lopo
from .reports import SCHEMA_VERSION, emit_reports, render_svgs
from .selection import select_features

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

logger = logging.getLogger("rfclust")

OUT_ENV = "RFCLUST_OUT"
CONFIG_KEYS = {f.name for f in fields(RunConfig)} | {"jobs"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def _floats(text):
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")


def _names(text):
    return tuple(t.strip() for t in text.split(",") if t.strip())


def _add_data_args(p, need_algo=True):
    p.add_argument("--features", required=True, help="features CSV keyed by f_id")
    p.add_argument("--targets", required=True, help="targets CSV keyed by f_id")
    if need_algo:
        p.add_argument("--algo", dest="algorithm_id", help="target column to predict")
    p.add_argument("--raw-precision", action="store_true",
                   help="targets hold raw precisions; apply log10 with a floor")
    p.add_argument("--precision-floor", type=float, default=1e-12)


def _add_run_args(p):
    p.add_argument("--config", help="TOML or JSON file with run settings")
    p.add_argument("--thresholds", type=_floats)
    p.add_argument("--variants", type=_names, help=f"subset of {','.join(VARIANTS)}")
    p.add_argument("--corr-threshold", dest="correlation_threshold", type=float)
    p.add_argument("--corr-mode", dest="correlation_mode", choices=["absolute", "signed"])
    p.add_argument("--min-group-size", dest="min_group_size", type=int)
    p.add_argument("--clusters", dest="m_clusters", type=int)
    p.add_argument("--repeats", dest="n_repeats", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--scaling", choices=["none", "minmax", "zscore"])
    p.add_argument("--trees", dest="n_trees", type=int)
    p.add_argument("--jobs", type=int)


def _add_out(p, required=False):
    p.add_argument("--out", default=os.environ.get(OUT_ENV),
                   required=required and not os.environ.get(OUT_ENV),
                   help=f"output directory (default ${OUT_ENV})")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rfclust", description="RF+clust performance prediction")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="full leave-one-problem-out evaluation")
    _add_data_args(run)
    _add_run_args(run)
    _add_out(run, required=True)
    run.add_argument("--svg", action="store_true", help="also render SVG figures")

    imp = sub.add_parser("importance", help="per-fold feature weight tables")
    _add_data_args(imp)
    _add_run_args(imp)
    _add_out(imp, required=True)

    sel = sub.add_parser("select-features", help="correlation-based feature portfolio")
    _add_data_args(sel)
    _add_run_args(sel)
    sel.add_argument("--fold", help="hold out this problem id before selecting")
    _add_out(sel)

    syn = sub.add_parser("synth", help="write a synthetic fixture dataset")
    for f in fields(FixtureSpec):
        flag = "--" + f.name.replace("_", "-")
        syn.add_argument(flag, dest=f.name, type=type(f.default) if f.default is not None else str)
    _add_out(syn, required=True)

    rep = sub.add_parser("report", help="regenerate SVGs from an existing report directory")
    _add_out(rep, required=True)
    return parser


def _load_config_file(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise UsageError(f"config file not found: {path}")
    text = path.read_text(encoding="utf-8")
    try:
        data = json.loads(text) if path.suffix == ".json" else tomllib.loads(text)
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise UsageError(f"cannot parse config file {path}: {exc}")
    unknown = sorted(set(data) - CONFIG_KEYS)
    if unknown:
        raise UsageError(f"unknown config key(s): {', '.join(unknown)}")
    return data


def _resolve_config(args) -> tuple[RunConfig, int]:
    settings = _load_config_file(args.config) if args.config else {}
    for key in CONFIG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    jobs = int(settings.pop("jobs", 1))
    if jobs < 1:
        raise UsageError("--jobs must be >= 1")
    if "algorithm_id" not in settings:
        raise UsageError("missing --algo (or algorithm_id in the config file)")
    try:
        return RunConfig(**settings), jobs
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid configuration: {exc}")


def _load(args):
    return load_dataset(args.features, args.targets, raw_precision=args.raw_precision,
                        precision_floor=args.precision_floor)


def cmd_run(args) -> int:
    config, jobs = _resolve_config(args)
    dataset = _load(args)
    dataset.target(config.algorithm_id)
    summary = run_lopo(dataset, config, jobs=jobs)
    emit_reports(summary, args.out, svg=args.svg)
    for (variant, thr), value in summary.mae_table().items():
        label = variant if thr is None else f"{variant}@{thr}"
        print(f"{label}\t{value!r}")
    return 0


def cmd_importance(args) -> int:
    config, _ = _resolve_config(args)
    variants = tuple(v for v in config.variants if v in ("rfclust_unsup", "rfclust_perm"))
    if not variants:
        variants = ("rfclust_unsup", "rfclust_perm")
    config = RunConfig(**{**config.__dict__, "variants": variants})
    dataset = _load(args)
    dataset.target(config.algorithm_id)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "weights.csv", "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# schema_version: {SCHEMA_VERSION}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["fold", "feature", "method", "weight"])
        for fold in lopo_folds(dataset):
            result = run_fold(dataset, fold, config)
            for method, table in result.weights_dict().items():
                for name, weight in table.items():
                    w.writerow([fold.test_problem, name, method, repr(weight)])
    return 0


def cmd_select_features(args) -> int:
    config, _ = _resolve_config(args)
    dataset = _load(args)
    y = dataset.target(config.algorithm_id)
    rows = list(range(dataset.n_problems))
    if args.fold is not None:
        if args.fold not in dataset.problem_ids:
            raise UsageError(f"unknown problem id {args.fold!r}")
        rows.remove(dataset.index_of(args.fold))
    X = dataset.features[rows]
    varying, dropped = drop_constant_columns(X, dataset.feature_names)
    portfolio = select_features(X[:, varying], y[rows], config.correlation_threshold,
                                config.forest_params, config.correlation_mode,
                                config.min_group_size)
    names = [dataset.feature_names[i] for i in varying]
    result = {
        "held_out": args.fold,
        "kept": [names[i] for i in portfolio.kept],
        "dropped_constant": dropped,
        "groups": [
            {"members": [names[i] for i in g.members],
             "representative": names[g.representative],
             "oob_mae": list(g.member_mae)}
            for g in portfolio.groups
        ],
    }
    text = json.dumps(result, indent=1) + "\n"
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "portfolio.json").write_text(text, encoding="utf-8")
        with open(out / "groups.csv", "w", newline="", encoding="utf-8") as fh:
            fh.write(f"# schema_version: {SCHEMA_VERSION}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["group", "feature", "oob_mae", "representative"])
            for k, g in enumerate(result["groups"]):
                for name, err in zip(g["members"], g["oob_mae"]):
                    w.writerow([k, name, repr(err), int(name == g["representative"])])
    else:
        sys.stdout.write(text)
    return 0


def cmd_synth(args) -> int:
    overrides = {f.name: getattr(args, f.name) for f in fields(FixtureSpec)
                 if getattr(args, f.name) is not None}
    try:
        spec = FixtureSpec(**overrides)
        spec.validate()
    except ValueError as exc:
        raise UsageError(str(exc))
    generate(spec).write(args.out)
    return 0


def cmd_report(args) -> int:
    out = Path(args.out)
    if not (out / "heatmap.csv").exists():
        raise UsageError(f"{out} does not contain heatmap.csv")
    for path in render_svgs(out):
        print(path.name)
    return 0


COMMANDS = {
    "run": cmd_run,
    "importance": cmd_importance,
    "select-features": cmd_select_features,
    "synth": cmd_synth,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, DatasetError) as exc:
        print(f"rfclust: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"rfclust: failed: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
