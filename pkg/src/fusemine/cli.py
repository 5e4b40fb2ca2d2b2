"""Command-line driver: ``fusemine <subcommand>``.

Subcommands cover the end-to-end workflow: ``synth`` draws a cohort,
``preprocess`` produces the numeric and discretized bundle variants,
``select``/``train``/``eval`` handle single pipelines, ``experiment``
runs the full approach-by-variant grid, and ``explain`` prints a stored
model as IF-THEN text.

Exit codes: 0 success, 2 input or validation failure, 3 pipeline
failure.  All outputs are deterministic given the flags (files are
written atomically via a temp file and rename); ``FUSEMINE_THREADS``
caps grid parallelism.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .ensemble import (
    APPROACHES,
    INPUT_SOURCES,
    FusionConfig,
    VoteModel,
    run_approach,
    weight_search,
)
from .errors import FusemineError
from .evaluation import (
    DEFAULT_ALGORITHM_ORDER,
    VARIANTS,
    cross_validate,
    render_report_text,
    render_summary_text,
    report_csv_rows,
    run_experiment_grid,
    stable_seed,
)
from .learners import (
    ALGORITHMS,
    Model,
    fired_rule_index,
    model_from_json,
    model_to_json,
    predict_label,
    render_rules,
    tree_paths,
)
from .preprocess import PreprocessConfig, anonymize, preprocess_bundle
from .selection import select_best_attributes
from .synth import CohortSpec, generate
from .tabular import (
    SOURCE_DISPLAY,
    SOURCE_ORDER,
    DataTable,
    SourceBundle,
    join_on_id,
    load_csv,
    save_csv,
    schema_from_json,
    schema_to_json,
)

APPROACH_FLAGS = {
    "merge": "merge",
    "select": "select",
    "ensemble": "ensemble",
    "ensemble-select": "ensemble-select",
}


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _input(fn, *args, **kwargs):
    """Run an input-construction step; its failures are validation errors."""
    try:
        return fn(*args, **kwargs)
    except FusemineError as err:
        raise CliError(str(err), 2) from err


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _atomic_save_csv(table: DataTable, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    save_csv(table, tmp)
    os.replace(tmp, path)


def save_bundle(bundle: SourceBundle, directory: Path) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    schemas = {}
    for name in bundle.ordered_names():
        table = bundle[name]
        _atomic_save_csv(table, directory / f"{name}.csv")
        schemas[name] = json.loads(schema_to_json(table.specs))
    _atomic_write(directory / "schema.json", json.dumps(schemas, indent=2, sort_keys=True) + "\n")


def load_bundle(directory: Path) -> SourceBundle:
    schema_path = directory / "schema.json"
    if not schema_path.is_file():
        raise CliError(f"no schema.json in {directory}", 2)
    schemas = json.loads(schema_path.read_text(encoding="utf-8"))
    sources = {}
    for name in SOURCE_ORDER:
        if name not in schemas:
            continue
        csv_path = directory / f"{name}.csv"
        if not csv_path.is_file():
            raise CliError(f"missing {csv_path}", 2)
        specs = _input(schema_from_json, json.dumps(schemas[name]))
        sources[name] = _input(load_csv, csv_path, specs)
    if not sources:
        raise CliError(f"{directory} holds no sources", 2)
    return _input(SourceBundle, sources)


def _parse_weights(text: str) -> dict[str, float]:
    parts = text.split(",")
    if len(parts) != len(INPUT_SOURCES):
        raise CliError(
            f"--weights needs {len(INPUT_SOURCES)} comma-separated values "
            f"(theory,practice,online)", 2,
        )
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise CliError(f"bad --weights value in {text!r}", 2) from None
    return dict(zip(INPUT_SOURCES, values))


def _variant_dirs(root: Path, variant: str) -> dict[str, Path]:
    wanted = VARIANTS if variant == "both" else (variant,)
    out = {}
    for name in wanted:
        directory = root / name
        if not directory.is_dir():
            raise CliError(f"preprocessed variant directory {directory} not found", 2)
        out[name] = directory
    return out


def _algorithm_list(text: str) -> list[str]:
    if text == "all":
        return list(DEFAULT_ALGORITHM_ORDER)
    names = [t.strip() for t in text.split(",") if t.strip()]
    for name in names:
        if name not in ALGORITHMS:
            raise CliError(f"unknown algorithm {name!r}", 2)
    return names


def _approach_list(text: str) -> list[str]:
    if text == "all":
        return list(APPROACHES)
    if text not in APPROACH_FLAGS:
        raise CliError(f"unknown approach {text!r}", 2)
    return [APPROACH_FLAGS[text]]


def save_model(model, path: Path) -> None:
    if isinstance(model, VoteModel):
        payload = {
            "kind": "vote",
            "combination_rule": model.combination_rule,
            "weights": model.weights,
            "models": {
                name: json.loads(model_to_json(base))
                for name, base in model.models.items()
            },
        }
    else:
        payload = {"kind": "single", "model": json.loads(model_to_json(model))}
    _atomic_write(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def load_model(path: Path):
    if not path.is_file():
        raise CliError(f"model file {path} not found", 2)
    payload = json.loads(path.read_text(encoding="utf-8"))
    if payload.get("kind") == "vote":
        models = {
            name: model_from_json(json.dumps(entry))
            for name, entry in payload["models"].items()
        }
        return VoteModel(
            models=models,
            weights={k: float(v) for k, v in payload["weights"].items()},
            combination_rule=payload["combination_rule"],
        )
    if payload.get("kind") == "single":
        return model_from_json(json.dumps(payload["model"]))
    raise CliError(f"{path} is not a stored model", 2)


def render_model(model) -> str:
    if isinstance(model, VoteModel):
        sections = []
        for name in SOURCE_ORDER:
            if name not in model.models:
                continue
            base = model.models[name]
            sections.append(f"{base.algorithm} rules ({SOURCE_DISPLAY[name]}):")
            sections.append("=====")
            sections.append(render_rules(base).rstrip("\n"))
            sections.append("")
        return "\n".join(sections).rstrip("\n") + "\n"
    return render_rules(model)


# --- subcommands ------------------------------------------------------------


def cmd_synth(args) -> int:
    spec = _input(
        CohortSpec,
        n_students=args.n,
        class_counts=tuple(args.proportions),
        noise_rate=args.noise,
        seed=args.seed,
    )
    bundle, truth = generate(spec)
    out = Path(args.out)
    save_bundle(bundle, out)
    _atomic_save_csv(truth, out / "truth.csv")
    print(f"wrote cohort of {args.n} students to {out}")
    return 0


def cmd_preprocess(args) -> int:
    bundle = load_bundle(Path(args.data))
    config = _preprocess_config(args)
    out = Path(args.out)
    if args.anonymize:
        bundle, mapping = anonymize(bundle, config.seed)
        lines = ["original,anonymous"] + [
            f"{orig},{new}" for orig, new in sorted(mapping.items(), key=lambda p: str(p[0]))
        ]
        _atomic_write(out / "id_mapping.csv", "\n".join(lines) + "\n")
    result = preprocess_bundle(bundle, config)
    save_bundle(result.numeric, out / "numeric")
    save_bundle(result.discretized, out / "discretized")
    _atomic_write(out / "params.json", result.params_json())
    print(f"wrote numeric and discretized bundles to {out}")
    return 0


def _preprocess_config(args) -> PreprocessConfig:
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise CliError(f"config file {path} not found", 2)
        config = PreprocessConfig.from_json(path.read_text(encoding="utf-8"))
    else:
        config = PreprocessConfig()
    if args.seed is not None:
        config = PreprocessConfig(
            n_bins=config.n_bins,
            bin_labels=config.bin_labels,
            pass_threshold=config.pass_threshold,
            seed=args.seed,
            fold_local_refit=config.fold_local_refit,
        )
    return config


def cmd_select(args) -> int:
    if args.variant == "both":
        raise CliError("select needs a single --variant", 2)
    directory = _variant_dirs(Path(args.data), args.variant)[args.variant]
    bundle = load_bundle(directory)
    merged = join_on_id(bundle, drop_id=True)
    names = select_best_attributes(merged) if args.select == "cfs" else [
        s.name for s in merged.specs if s.role == "input"
    ]
    payload = json.dumps(names, indent=2) + "\n"
    if args.out:
        _atomic_write(Path(args.out), payload)
    print(payload, end="")
    return 0


def cmd_train(args) -> int:
    if args.variant == "both":
        raise CliError("train needs a single --variant", 2)
    directory = _variant_dirs(Path(args.data), args.variant)[args.variant]
    bundle = load_bundle(directory)
    config = _input(
        FusionConfig,
        approach=_approach_list(args.approach)[0],
        weights=_parse_weights(args.weights),
    )
    model, _prepared = run_approach(config, bundle, args.algorithm, seed=args.seed)
    out = Path(args.out)
    save_model(model, out / "model.json")
    _atomic_write(out / "model.txt", render_model(model))
    print(render_model(model), end="")
    return 0


def cmd_eval(args) -> int:
    if args.variant == "both":
        raise CliError("eval needs a single --variant", 2)
    directory = _variant_dirs(Path(args.data), args.variant)[args.variant]
    bundle = load_bundle(directory)
    config = _input(
        FusionConfig,
        approach=_approach_list(args.approach)[0],
        weights=_parse_weights(args.weights),
    )
    result = cross_validate(
        config, args.algorithm, bundle, k=args.k,
        seed=stable_seed(args.seed, config.approach, args.variant, args.algorithm),
        plan_seed=stable_seed(args.seed, "folds", args.variant),
        fold_local_select=args.fold_local_select,
    )
    print(
        f"{config.approach},{args.variant},{args.algorithm},"
        f"{result.accuracy_pct:.4f},{result.auc:.4f}"
    )
    if args.out:
        payload = {
            "approach": config.approach,
            "variant": args.variant,
            "algorithm": args.algorithm,
            "accuracy_pct": result.accuracy_pct,
            "auc": result.auc,
            "per_class_auc": result.per_class_auc,
            "confusion": result.confusion,
            "fold_accuracy": [f.accuracy_pct for f in result.folds],
        }
        _atomic_write(Path(args.out), json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_experiment(args) -> int:
    root = Path(args.data)
    variants = {
        name: load_bundle(directory)
        for name, directory in _variant_dirs(root, args.variant).items()
    }
    algorithms = _algorithm_list(args.algorithm)
    approaches = _approach_list(args.approach)
    weights = _parse_weights(args.weights)
    out = Path(args.out)
    max_workers = int(os.environ.get("FUSEMINE_THREADS", "1") or "1")

    if args.weight_search:
        search_bundle = variants.get("discretized") or next(iter(variants.values()))
        weights = weight_search(
            search_bundle, algorithms[0], k=args.k, seed=stable_seed(args.seed, "weights")
        )
        ordered = ",".join(str(weights[s]) for s in INPUT_SOURCES)
        print(f"weight search chose theory,practice,online = {ordered}")

    grid = run_experiment_grid(
        variants,
        algorithms=algorithms,
        approaches=approaches,
        k=args.k,
        seed=args.seed,
        weights=weights,
        max_workers=max_workers,
    )
    _atomic_write(out / "report.csv", report_csv_rows(grid))
    for (approach, variant), report in sorted(grid.reports.items()):
        _atomic_write(
            out / f"report_{approach}_{variant}.txt", render_report_text(report)
        )
    _atomic_write(out / "summary.txt", render_summary_text(grid))
    summary_lines = ["approach,variant,avg_accuracy_pct,avg_auc"]
    for (approach, variant) in sorted(grid.reports):
        acc, auc = grid.reports[(approach, variant)].averages()
        summary_lines.append(f"{approach},{variant},{acc:.4f},{auc:.4f}")
    _atomic_write(out / "summary.csv", "\n".join(summary_lines) + "\n")
    algorithm, approach, variant, acc, auc = grid.best_cell()
    print(
        f"best cell: {algorithm} / {approach} / {variant} "
        f"= {acc:.4f} %Accuracy, {auc:.4f} AUC"
    )
    return 0


def cmd_explain(args) -> int:
    model = load_model(Path(args.model))
    print(render_model(model), end="")
    if args.student is None:
        return 0
    if not args.data:
        raise CliError("--student needs --data/--variant to locate the row", 2)
    directory = _variant_dirs(Path(args.data), args.variant)[args.variant]
    bundle = load_bundle(directory)
    if isinstance(model, VoteModel):
        return _explain_vote_student(model, bundle, args.student)
    merged = join_on_id(bundle, drop_id=True)
    if not 0 <= args.student < merged.n_rows:
        raise CliError(f"student row {args.student} out of range", 2)
    row = merged.rows[args.student]
    label = predict_label(model, row)
    print()
    if hasattr(model.structure, "rules"):
        fired = fired_rule_index(model, row)
        rule = model.structure.rules[fired]
        text = (
            "ELSE"
            if rule.is_default
            else "IF " + " AND ".join(c.render() for c in rule.conditions)
        )
        print(f"student {args.student}: rule {fired + 1} fires ({text}) -> {label}")
    else:
        print(f"student {args.student}: predicted {label}")
        for conditions, leaf in tree_paths(model):
            from .learners.model import condition_matches
            from .learners.encode import encode_row

            enc = encode_row(
                model.specs, model.input_indices,
                model.metadata.get("numeric_fill", {}), row,
            )
            if all(condition_matches(model, c, enc) for c in conditions):
                path = " AND ".join(c.render() for c in conditions) or "(root)"
                print(f"leaf path: {path}")
                break
    return 0


def _explain_vote_student(model: VoteModel, bundle, student: int) -> int:
    from .ensemble import vote_predict, vote_predict_label

    parts = {}
    for name in model.models:
        pair = SourceBundle({name: bundle[name], "exam": bundle["exam"]})
        table = join_on_id(pair, drop_id=False)
        if not 0 <= student < table.n_rows:
            raise CliError(f"student row {student} out of range", 2)
        parts[name] = table.rows[student]
    print()
    for name in SOURCE_ORDER:
        if name not in model.models:
            continue
        label = predict_label(model.models[name], parts[name])
        print(f"student {student}: {SOURCE_DISPLAY[name]} model votes {label}")
    print(f"student {student}: combined vote -> {vote_predict_label(model, parts)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fusemine",
        description="Multi-source data fusion pipeline for predicting student performance",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="generate a synthetic cohort")
    synth.add_argument("--n", type=int, default=57)
    synth.add_argument(
        "--proportions", type=int, nargs=3, default=[19, 17, 21],
        metavar=("PASS", "FAIL", "DROPOUT"),
    )
    synth.add_argument("--noise", type=float, default=0.0)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--config", help="JSON run config; flags override")
    synth.add_argument("--out", required=True)
    synth.set_defaults(func=cmd_synth)

    pre = sub.add_parser("preprocess", help="fuse, rescale, and discretize a raw bundle")
    pre.add_argument("--data", required=True, help="directory with the four source CSVs")
    pre.add_argument("--out", required=True)
    pre.add_argument("--config", help="JSON file with preprocess settings")
    pre.add_argument("--seed", type=int, default=None)
    pre.add_argument("--anonymize", action="store_true")
    pre.set_defaults(func=cmd_preprocess)

    select = sub.add_parser("select", help="run attribute selection on the merged table")
    select.add_argument("--data", required=True, help="preprocess output directory")
    select.add_argument("--variant", choices=(*VARIANTS, "both"), default="discretized")
    select.add_argument("--select", choices=("cfs", "none"), default="cfs")
    select.add_argument("--out")
    select.set_defaults(func=cmd_select)

    train_p = sub.add_parser("train", help="train one approach on the full dataset")
    train_p.add_argument("--data", required=True)
    train_p.add_argument("--variant", choices=(*VARIANTS, "both"), default="discretized")
    train_p.add_argument("--approach", default="merge")
    train_p.add_argument("--algorithm", choices=ALGORITHMS, default="part")
    train_p.add_argument("--weights", default="1,1,1")
    train_p.add_argument("--seed", type=int, default=0)
    train_p.add_argument("--config", help="JSON run config; flags override")
    train_p.add_argument("--out", required=True)
    train_p.set_defaults(func=cmd_train)

    eval_p = sub.add_parser("eval", help="cross-validate one cell")
    eval_p.add_argument("--data", required=True)
    eval_p.add_argument("--variant", choices=(*VARIANTS, "both"), default="discretized")
    eval_p.add_argument("--approach", default="merge")
    eval_p.add_argument("--algorithm", choices=ALGORITHMS, default="part")
    eval_p.add_argument("--weights", default="1,1,1")
    eval_p.add_argument("--k", type=int, default=10)
    eval_p.add_argument("--seed", type=int, default=0)
    eval_p.add_argument("--fold-local-select", action="store_true")
    eval_p.add_argument("--config", help="JSON run config; flags override")
    eval_p.add_argument("--out")
    eval_p.set_defaults(func=cmd_eval)

    exp = sub.add_parser("experiment", help="run the approach-by-variant grid")
    exp.add_argument("--data", required=True)
    exp.add_argument("--variant", choices=(*VARIANTS, "both"), default="both")
    exp.add_argument("--approach", default="all")
    exp.add_argument("--algorithm", default="all")
    exp.add_argument("--weights", default="1,1,1")
    exp.add_argument("--weight-search", action="store_true")
    exp.add_argument("--k", type=int, default=10)
    exp.add_argument("--seed", type=int, default=0)
    exp.add_argument("--config", help="JSON run config; flags override")
    exp.add_argument("--out", required=True)
    exp.set_defaults(func=cmd_experiment)

    explain = sub.add_parser("explain", help="print a stored model as IF-THEN text")
    explain.add_argument("--model", required=True)
    explain.add_argument("--student", type=int, default=None)
    explain.add_argument("--data")
    explain.add_argument("--variant", choices=(*VARIANTS, "both"), default="discretized")
    explain.set_defaults(func=cmd_explain)
    return parser


def _merge_config(args, argv) -> None:
    """Fill flags from a JSON run config; explicit flags win.

    The preprocess subcommand keeps its own config semantics (binning
    and labeling parameters), so it is left alone here.
    """
    path = getattr(args, "config", None)
    if not path or args.command == "preprocess":
        return
    config_path = Path(path)
    if not config_path.is_file():
        raise CliError(f"config file {config_path} not found", 2)
    try:
        payload = json.loads(config_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise CliError(f"bad config JSON: {err}", 2) from None
    if not isinstance(payload, dict):
        raise CliError("run config must be a JSON object", 2)
    for key, value in payload.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr) or attr in ("config", "command", "func"):
            raise CliError(f"unknown config key {key!r} for {args.command}", 2)
        flag = "--" + key.replace("_", "-")
        if flag not in argv:
            setattr(args, attr, value)


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _merge_config(args, argv)
        if args.command in ("synth",) and args.n < 3:
            raise CliError("cohort needs at least 3 students", 2)
        if getattr(args, "k", 2) < 2:
            raise CliError("k must be at least 2", 2)
        return args.func(args)
    except CliError as err:
        print(f"error: {err}", file=sys.stderr)
        return err.code
    except FusemineError as err:
        print(f"pipeline error: {err}", file=sys.stderr)
        return 3
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
