"""Command-line front end for the batch pipeline.

Subcommands: ``generate`` (write a synthetic dataset), ``train`` (fit and
persist a forest, print test metrics), ``explain`` (print an importance
report), and ``ablate`` (write a sensor-ablation report in text and CSV).
All randomness flows from explicit ``--seed`` flags; outputs carry no
timestamps, so identical invocations are byte-identical. Exit codes: 0 on
success, 2 on usage or data errors, 3 on internal invariant failures. The
``MILLSENSE_THREADS`` environment variable caps training parallelism without
affecting results. Output is plain text with no color codes.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np
import yaml

from . import ablation as ab
from . import explain as ex
from .data import Dataset, load_dataset, save_dataset, split_train_test
from .errors import ConfigError, MillsenseError, UnknownTarget
from .features import featurize_dataset, write_features_csv
from .forest import HyperParams, fit, load_forest, predict_matrix, save_forest
from .metrics import mae, mape, mse
from .synthgen import SensorMode, SynthConfig, generate

_METRICS_FMT = "target={target} mse={mse:.17g} mae={mae:.17g} mape={mape:.17g}%"


def _load_synth_config(path: Path) -> SynthConfig:
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from None
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping of option names to values")

    known = {"n_experiments", "seed", "param_ranges", "noise_sd", "irrelevant_sensor_mode"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config field {sorted(unknown)[0]!r}")
    kwargs = dict(raw)
    if "irrelevant_sensor_mode" in kwargs:
        try:
            kwargs["irrelevant_sensor_mode"] = SensorMode(kwargs["irrelevant_sensor_mode"])
        except ValueError:
            raise ConfigError(
                "irrelevant_sensor_mode must be 'informative' or 'pure_noise', "
                f"got {kwargs['irrelevant_sensor_mode']!r}"
            ) from None
    if "param_ranges" in kwargs:
        pr = kwargs["param_ranges"]
        if not isinstance(pr, dict):
            raise ConfigError("param_ranges must be a mapping")
        kwargs["param_ranges"] = {k: tuple(v) if isinstance(v, list) else v for k, v in pr.items()}
    try:
        return SynthConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def _load_data_dir(data_dir: Path) -> Dataset:
    return load_dataset(data_dir / "experiments.csv", data_dir / "signals")


def _target_vector(ds: Dataset, target: str) -> np.ndarray:
    names = ds.target_names()
    if target not in names:
        raise UnknownTarget(f"unknown target {target!r}; dataset has {', '.join(names)}")
    return np.array([r.targets[target] for r in ds.records], dtype=float)


def _hyper_from_args(args: argparse.Namespace) -> HyperParams:
    return HyperParams(
        n_trees=args.trees,
        max_depth=args.max_depth,
        min_samples_leaf=args.min_samples_leaf,
        max_features=args.max_features,
        seed=args.seed,
    )


def _cmd_generate(args: argparse.Namespace) -> int:
    cfg = _load_synth_config(Path(args.config))
    ds = generate(cfg)
    out = Path(args.out)
    save_dataset(ds, out / "experiments.csv", out / "signals")
    print(f"wrote {len(ds)} experiments to {out}")
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    ds = _load_data_dir(Path(args.data))
    _target_vector(ds, args.target)  # validate before the expensive work
    train, test = split_train_test(ds, args.test_fraction, args.seed)
    X_train, names = featurize_dataset(train, args.drop)
    X_test, _ = featurize_dataset(test, args.drop)
    y_train = _target_vector(train, args.target)
    y_test = _target_vector(test, args.target)

    if args.dump_features is not None:
        full_X, full_names = featurize_dataset(ds, args.drop)
        write_features_csv(full_X, full_names, args.dump_features)

    model = fit(X_train, y_train, _hyper_from_args(args), feature_names=names,
                target=args.target)
    save_forest(model, args.out)
    pred = predict_matrix(model, X_test)
    print(f"features={len(names)}")
    print(_METRICS_FMT.format(target=args.target, mse=mse(y_test, pred),
                              mae=mae(y_test, pred), mape=mape(y_test, pred)))
    return 0


def _cmd_explain(args: argparse.Namespace) -> int:
    model = load_forest(Path(args.model))
    if args.method == "gini":
        report = ex.gini_report(model)
        sys.stdout.write(ex.report_to_text(report))
        return 0

    ds = _load_data_dir(Path(args.data))
    if model.target is None:
        raise UnknownTarget("model file carries no target name; cannot evaluate")
    if args.subset in ("train", "test"):
        train, test = split_train_test(ds, args.test_fraction, args.split_seed)
        part = train if args.subset == "train" else test
        X, names = featurize_dataset(part)
        X = X[:, [names.index(nm) for nm in model.feature_names]]
        report = ex.permutation_importance(
            model, X, _target_vector(part, model.target),
            repeats=args.repeats, seed=args.seed, subset_label=args.subset,
        )
    else:
        X, names = featurize_dataset(ds)
        X = X[:, [names.index(nm) for nm in model.feature_names]]
        y = _target_vector(ds, model.target)
        if args.subset is None:
            report = ex.permutation_importance(model, X, y, repeats=args.repeats,
                                               seed=args.seed)
        else:
            report = ex.subset_importance(model, X, y, args.subset,
                                          repeats=args.repeats, seed=args.seed)
    sys.stdout.write(ex.report_to_text(report))
    return 0


def _cmd_ablate(args: argparse.Namespace) -> int:
    if not args.auto and not args.drop:
        raise ConfigError("either --drop or --auto is required")
    drops = [] if args.drop == ["none"] else args.drop
    ds = _load_data_dir(Path(args.data))
    targets = [t for t in args.targets.split(",") if t]
    report = ab.run_ablation(
        ds,
        targets,
        None if args.auto else drops,
        hp=_hyper_from_args(args),
        split_seed=args.seed,
        test_fraction=args.test_fraction,
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(ab.ablation_to_text(report))
    csv_path = out.with_suffix(".csv") if out.suffix != ".csv" else out.with_suffix(".flat.csv")
    csv_path.write_text(ab.ablation_to_csv(report))
    if args.auto:
        print("suggested=" + (",".join(report.suggested_groups) or "-"))
    print(f"wrote {out} and {csv_path}")
    return 0


def _add_hyper_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--trees", type=int, default=100, help="number of trees (default 100)")
    p.add_argument("--max-depth", type=int, default=12, help="maximum tree depth (default 12)")
    p.add_argument("--min-samples-leaf", type=int, default=2,
                   help="minimum samples per leaf (default 2)")
    p.add_argument("--max-features", type=int, default=None,
                   help="candidate features per split (default: ceil(p/3))")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="millsense",
        description="Train, explain, and ablate roughness-prediction forests on milling data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic dataset")
    p.add_argument("--config", required=True, help="YAML synthesis config")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("train", help="train one target model and print test metrics")
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--target", required=True, help="target column, e.g. Ramean")
    p.add_argument("--drop", action="append", default=[], metavar="PREFIX",
                   help="drop feature group (repeatable), e.g. --drop Fz_")
    p.add_argument("--seed", type=int, default=0, help="split and training seed")
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--out", required=True, help="model output path")
    p.add_argument("--dump-features", default=None, metavar="PATH",
                   help="also write the feature matrix as CSV")
    _add_hyper_flags(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("explain", help="print an importance report")
    p.add_argument("--model", required=True, help="model file from train")
    p.add_argument("--data", default=None, help="dataset directory (needed for perm)")
    p.add_argument("--method", choices=("gini", "perm"), required=True)
    p.add_argument("--subset", default=None,
                   help="'train', 'test', or a predicate like \"f<=0.45\"")
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--seed", type=int, default=0, help="permutation seed")
    p.add_argument("--split-seed", type=int, default=0,
                   help="seed of the train/test split for --subset train|test")
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.set_defaults(func=_cmd_explain)

    p = sub.add_parser("ablate", help="run a sensor-ablation study")
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--targets", required=True, help="comma-separated target list")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--drop", action="append", default=[], metavar="PREFIX",
                       help="drop feature group (repeatable); 'none' drops nothing")
    group.add_argument("--auto", action="store_true",
                       help="drop groups suggested by low Gini importance")
    p.add_argument("--seed", type=int, default=0, help="split and training seed")
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--out", required=True, help="report output path (text; CSV alongside)")
    _add_hyper_flags(p)
    p.set_defaults(func=_cmd_ablate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "explain" and args.method == "perm" and args.data is None:
        parser.error("--data is required for --method perm")
    try:
        return args.func(args)
    except MillsenseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - internal failure path
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
