"""Command-line interface.

Subcommands: generate-toy, train, eval, flipset, perturb, sweep. Exit
codes: 0 success, 2 validation or configuration error, 3 runtime failure.
Non-convergence of a trainer is reported as a warning, not a failure.

Every artifact-producing command writes a ``<output>.manifest.json``
sidecar recording the command, tool version, effective seed, input file
hashes, and effective config, so a result can be traced to its inputs.
Identical inputs and seed produce byte-identical outputs; manifests carry
no timestamps for that reason.

Set STRATAWARE_LOG_LEVEL (DEBUG, INFO, ...) to change log verbosity.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .cost import cost_model_from_obj, save_cost_model
from .data import ToyParams, generate_toy, load_csv, make_folds, save_csv
from .evaluation import (
    IMPROVEMENT_BY_LABEL,
    IMPROVEMENT_BY_PREDICTION,
    evaluate,
    evaluate_folds,
    lambda_sweep,
    metrics_csv,
    true_improvement,
)
from .exceptions import NonFiniteLoss, NoValidPerturbation, StratawareError
from .model import load_model, save_model
from .response import best_response, find_cost_reducing_perturbation, flipset
from .taxonomy import FeatureTaxonomy, normalize_family
from .training import TrainConfig, train

log = logging.getLogger("strataware")

RUNTIME_ERRORS = (NonFiniteLoss, NoValidPerturbation, ArithmeticError)
CONFIG_ERRORS = (ValueError, OSError)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _read_json(path: str) -> dict | list:
    p = Path(path)
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as err:
        raise ValueError(f"{p}: not valid JSON ({err})") from None


def _write_manifest(
    out_path: Path, command: str, seed, inputs: dict[str, str], config: dict, outputs: list[str]
) -> None:
    manifest = {
        "command": command,
        "tool_version": __version__,
        "seed": seed,
        "inputs": {
            name: {"path": str(p), "sha256": _sha256(Path(p))} for name, p in inputs.items()
        },
        "config": config,
        "outputs": outputs,
    }
    path = Path(str(out_path) + ".manifest.json")
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    log.info("wrote manifest %s", path)


def _print_json(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def _load_bundle(args, need_model: bool = True):
    """Load the taxonomy, cost model, data, and optionally the model that
    most subcommands share, verifying the model/taxonomy hash binding."""
    taxonomy = FeatureTaxonomy.from_obj(_read_json(args.taxonomy))
    cost_model = cost_model_from_obj(_read_json(args.cost), taxonomy)
    data = load_csv(
        args.data,
        taxonomy,
        label_column=args.label_column,
        positive_label=args.positive_label,
    )
    if not need_model:
        return taxonomy, cost_model, data, None, None
    linear, meta = load_model(args.model)
    linear.check_taxonomy(taxonomy)
    stored = meta.get("taxonomy_hash", "")
    if stored and stored != taxonomy.digest():
        raise ValueError(
            f"model {args.model} was trained against a different taxonomy "
            f"(hash {stored[:12]}... != {taxonomy.digest()[:12]}...)"
        )
    return taxonomy, cost_model, data, linear, meta


# -- subcommands -------------------------------------------------------------


def cmd_generate_toy(args) -> int:
    params = ToyParams.load(args.params) if args.params else ToyParams()
    if args.seed is not None:
        params = ToyParams.from_obj({**params.to_obj(), "seed": args.seed})
    data = generate_toy(params)
    out_csv = Path(args.out_csv)
    out_tax = Path(args.out_taxonomy)
    save_csv(data, out_csv)
    data.taxonomy.save(out_tax)
    inputs = {"params": args.params} if args.params else {}
    _write_manifest(
        out_csv,
        "generate-toy",
        params.seed,
        inputs,
        params.to_obj(),
        [str(out_csv), str(out_tax)],
    )
    summary = {
        "rows": data.n,
        "positives": int(np.sum(data.y == 1)),
        "csv": str(out_csv),
        "taxonomy": str(out_tax),
        "seed": params.seed,
    }
    if args.json:
        _print_json(summary)
    else:
        print(
            f"wrote {data.n} rows ({summary['positives']} positive) to {out_csv}; "
            f"taxonomy to {out_tax}"
        )
    return 0


def cmd_train(args) -> int:
    taxonomy = FeatureTaxonomy.from_obj(_read_json(args.taxonomy))
    cost_model = cost_model_from_obj(_read_json(args.cost), taxonomy)
    data = load_csv(
        args.data,
        taxonomy,
        label_column=args.label_column,
        positive_label=args.positive_label,
    )
    config = TrainConfig.load(args.config) if args.config else TrainConfig()
    overrides = {}
    if args.method is not None:
        overrides["method"] = args.method
    if args.lambda_ is not None:
        overrides["lambda"] = args.lambda_
    if args.eta is not None:
        overrides["eta"] = args.eta
    if args.seed is not None:
        overrides["seed"] = args.seed
    if overrides:
        config = TrainConfig.from_obj({**config.to_obj(), **overrides})
    result = train(data, cost_model, config)
    out = Path(args.out)
    save_model(
        result.model,
        taxonomy,
        out,
        method=result.method,
        config=config.to_obj(),
        converged=result.converged,
    )
    inputs = {"data": args.data, "taxonomy": args.taxonomy, "cost": args.cost}
    if args.config:
        inputs["config"] = args.config
    _write_manifest(out, "train", config.seed, inputs, config.to_obj(), [str(out)])
    if not result.converged:
        log.warning("optimizer did not reach grad_tol; model saved anyway")
    summary = {
        "method": result.method,
        "loss": result.loss,
        "converged": result.converged,
        "n_iter": result.n_iter,
        "model": str(out),
    }
    if args.json:
        _print_json(summary)
    else:
        flag = "" if result.converged else "  [did not converge]"
        print(
            f"trained {result.method}: loss={result.loss:.6f} "
            f"iters={result.n_iter}{flag}; model -> {out}"
        )
    return 0


def cmd_eval(args) -> int:
    taxonomy, cost_model, data, linear, meta = _load_bundle(args)
    family = normalize_family(args.response)
    condition = args.improvement_condition
    if args.cv:
        folds = make_folds(data.n, args.cv, seed=args.seed if args.seed is not None else 0)
        summary = evaluate_folds(
            linear,
            data,
            cost_model,
            folds,
            deployment_family=family,
            improvement_condition=condition,
            method=meta.get("method", ""),
        )
        obj = summary.to_obj()
        if args.out:
            Path(args.out).write_text(metrics_csv([summary]))
            _write_manifest(
                Path(args.out),
                "eval",
                folds.seed,
                {"model": args.model, "data": args.data, "taxonomy": args.taxonomy, "cost": args.cost},
                {"response": family, "cv": args.cv, "improvement_condition": condition},
                [args.out],
            )
        if args.json:
            _print_json(obj)
        else:
            print(f"{'metric':<20}{'mean':>12}{'std':>12}")
            for name in ("test_error", "deployment_error", "improvement_rate"):
                mean = summary.means.get(name)
                std = summary.stds.get(name)
                mean_s = "absent" if mean is None else f"{mean:.4f}"
                std_s = "" if std is None else f"{std:.4f}"
                print(f"{name:<20}{mean_s:>12}{std_s:>12}")
        return 0
    report = evaluate(
        linear,
        data,
        cost_model,
        deployment_family=family,
        improvement_condition=condition,
        method=meta.get("method", ""),
    )
    obj = report.to_obj()
    if data.oracle is not None:
        obj["true_improvement"] = true_improvement(linear, data, cost_model)
    if args.json:
        _print_json(obj)
    else:
        imp = "absent" if report.improvement_rate is None else f"{report.improvement_rate:.4f}"
        print(
            f"n={report.n_eval}  test_error={report.test_error:.4f}  "
            f"deployment_error={report.deployment_error:.4f}  improvement_rate={imp}"
        )
    return 0


def cmd_flipset(args) -> int:
    taxonomy, cost_model, data, linear, _ = _load_bundle(args)
    if not (0 <= args.row < data.n):
        raise ValueError(f"row {args.row} out of range for {data.n} data rows")
    fs = flipset(data.X[args.row], linear, cost_model, taxonomy, family=args.family)
    if args.json:
        _print_json(fs.to_obj())
    else:
        print(fs.to_markdown(round_values=args.round), end="")
    return 0


def cmd_perturb(args) -> int:
    taxonomy, cost_model, data, linear, _ = _load_bundle(args)
    result = find_cost_reducing_perturbation(cost_model, linear, taxonomy, data.X)
    scores = np.atleast_1d(linear.score(data.X))
    rejected = np.flatnonzero(scores < 0)[: args.max_rows]
    examples = []
    for idx in rejected:
        before = best_response(data.X[idx], linear, cost_model, taxonomy, "A")
        after = best_response(data.X[idx], linear, result.new_model, taxonomy, "A")

        def cost_repr(r):
            return r.cost_incurred if r.moved else None

        examples.append(
            {
                "row": int(idx),
                "cost_before": cost_repr(before),
                "cost_after": cost_repr(after),
            }
        )
    obj = {
        "feature_i": taxonomy.names[result.feature_i],
        "feature_j": taxonomy.names[result.feature_j],
        "block": result.block,
        "tau": result.tau,
        "score_variance_before": result.variance_before,
        "score_variance_after": result.variance_after,
        "examples": examples,
    }
    if args.out:
        out = Path(args.out)
        out.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
        _write_manifest(
            out,
            "perturb",
            None,
            {"model": args.model, "data": args.data, "taxonomy": args.taxonomy, "cost": args.cost},
            {"max_rows": args.max_rows},
            [args.out],
        )
    if args.json:
        _print_json(obj)
    else:
        print(
            f"couple {obj['feature_i']} and {obj['feature_j']} ({result.block} block) "
            f"with tau={result.tau:.6g}: effective variance {result.variance_before:.4f} "
            f"-> {result.variance_after:.4f}"
        )
        for ex in examples:
            after = "impossible" if ex["cost_after"] is None else f"{ex['cost_after']:.4f}"
            before = "impossible" if ex["cost_before"] is None else f"{ex['cost_before']:.4f}"
            print(f"  row {ex['row']}: response cost {before} -> {after}")
    return 0


def cmd_sweep(args) -> int:
    taxonomy = FeatureTaxonomy.from_obj(_read_json(args.taxonomy))
    cost_model = cost_model_from_obj(_read_json(args.cost), taxonomy)
    data = load_csv(
        args.data,
        taxonomy,
        label_column=args.label_column,
        positive_label=args.positive_label,
    )
    config = TrainConfig.load(args.config) if args.config else TrainConfig()
    if args.seed is not None:
        config = TrainConfig.from_obj({**config.to_obj(), "seed": args.seed})
    try:
        grid = [float(v) for v in args.grid.split(",") if v.strip() != ""]
    except ValueError:
        raise ValueError(f"--grid must be comma-separated numbers, got {args.grid!r}") from None
    folds = make_folds(data.n, args.cv, seed=config.seed)
    result = lambda_sweep(
        data,
        cost_model,
        config,
        grid,
        folds,
        deployment_family=normalize_family(args.response),
        improvement_condition=args.improvement_condition,
    )
    out = Path(args.out)
    out.write_text(metrics_csv(result.summaries))
    inputs = {"data": args.data, "taxonomy": args.taxonomy, "cost": args.cost}
    if args.config:
        inputs["config"] = args.config
    _write_manifest(
        out,
        "sweep",
        config.seed,
        inputs,
        {**config.to_obj(), "grid": grid, "cv": args.cv},
        [str(out)],
    )
    if args.json:
        _print_json(result.to_obj())
    else:
        print(f"{'lambda':>10}{'test_error':>14}{'deploy_error':>14}{'improvement':>14}")
        for lam, summary in zip(result.lambda_grid, result.summaries):
            imp = summary.means.get("improvement_rate")
            imp_s = "absent" if imp is None else f"{imp:.4f}"
            print(
                f"{lam:>10g}{summary.means['test_error']:>14.4f}"
                f"{summary.means['deployment_error']:>14.4f}{imp_s:>14}"
            )
        print(f"fold-level metrics -> {out}")
    return 0


# -- parser -------------------------------------------------------------------


def _add_common_data_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--label-column", default="label", help="label column name (default: label)")
    p.add_argument(
        "--positive-label", default="1", help="cell value mapped to +1 (default: '1')"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="strataware",
        description="Train and audit linear classifiers under strategic feature adaptation.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate-toy", help="sample the synthetic four-feature task")
    p.add_argument("--params", help="toy parameter JSON (defaults used when omitted)")
    p.add_argument("--out-csv", required=True, help="output CSV path")
    p.add_argument("--out-taxonomy", required=True, help="output taxonomy JSON path")
    p.add_argument("--seed", type=int, default=None, help="override the params seed")
    p.add_argument("--json", action="store_true", help="machine-readable summary on stdout")
    p.set_defaults(func=cmd_generate_toy)

    p = sub.add_parser("train", help="fit a model and save it as JSON")
    p.add_argument("--data", required=True, help="training CSV")
    p.add_argument("--taxonomy", required=True, help="taxonomy JSON")
    p.add_argument("--cost", required=True, help="cost model JSON")
    p.add_argument("--config", help="training config JSON (defaults used when omitted)")
    p.add_argument("--out", required=True, help="output model JSON path")
    p.add_argument("--method", help="override config method")
    p.add_argument("--lambda", dest="lambda_", type=float, help="override improvement weight")
    p.add_argument("--eta", type=float, help="override directional penalty weight")
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.add_argument("--json", action="store_true")
    _add_common_data_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score a saved model on a dataset")
    p.add_argument("--model", required=True, help="model JSON")
    p.add_argument("--data", required=True, help="evaluation CSV")
    p.add_argument("--taxonomy", required=True, help="taxonomy JSON (hash-checked against the model)")
    p.add_argument("--cost", required=True, help="cost model JSON")
    p.add_argument(
        "--response",
        default="M",
        help="family subjects may move at deployment: I, M, or A (default M)",
    )
    p.add_argument("--cv", type=int, default=0, help="evaluate per fold, reporting mean and std")
    p.add_argument(
        "--improvement-condition",
        choices=(IMPROVEMENT_BY_LABEL, IMPROVEMENT_BY_PREDICTION),
        default=IMPROVEMENT_BY_LABEL,
        help="condition the improvement rate on true negatives (label) or on rejections (prediction)",
    )
    p.add_argument("--seed", type=int, default=None, help="fold shuffling seed (default 0)")
    p.add_argument("--out", help="also write fold-level metrics CSV here (with --cv)")
    p.add_argument("--json", action="store_true")
    _add_common_data_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("flipset", help="show one subject's best response")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--taxonomy", required=True)
    p.add_argument("--cost", required=True)
    p.add_argument("--row", type=int, required=True, help="0-based data row")
    p.add_argument("--family", default="A", help="movable features: I, M, or A (default A)")
    p.add_argument("--round", action="store_true", help="round values for display")
    p.add_argument("--json", action="store_true")
    _add_common_data_flags(p)
    p.set_defaults(func=cmd_flipset)

    p = sub.add_parser(
        "perturb", help="find a cost coupling that lets rejected rows reach the boundary cheaper"
    )
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--taxonomy", required=True)
    p.add_argument("--cost", required=True)
    p.add_argument("--max-rows", type=int, default=10, help="example rows to report (default 10)")
    p.add_argument("--out", help="write the perturbation report JSON here")
    p.add_argument("--json", action="store_true")
    _add_common_data_flags(p)
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("sweep", help="cross-validate over an ascending lambda grid")
    p.add_argument("--data", required=True)
    p.add_argument("--taxonomy", required=True)
    p.add_argument("--cost", required=True)
    p.add_argument("--config", help="training config JSON (defaults used when omitted)")
    p.add_argument("--grid", required=True, help="comma-separated ascending lambdas")
    p.add_argument("--out", required=True, help="output metrics CSV")
    p.add_argument("--cv", type=int, default=5, help="folds per grid point (default 5)")
    p.add_argument("--response", default="M", help="deployment family for metrics (default M)")
    p.add_argument(
        "--improvement-condition",
        choices=(IMPROVEMENT_BY_LABEL, IMPROVEMENT_BY_PREDICTION),
        default=IMPROVEMENT_BY_LABEL,
    )
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.add_argument("--json", action="store_true")
    _add_common_data_flags(p)
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    level = os.environ.get("STRATAWARE_LOG_LEVEL", "WARNING").upper()
    valid = {"CRITICAL", "ERROR", "WARNING", "INFO", "DEBUG", "NOTSET"}
    logging.basicConfig(level=level if level in valid else "WARNING")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except RUNTIME_ERRORS as err:
        print(f"error: {err}", file=sys.stderr)
        return 3
    except CONFIG_ERRORS as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except StratawareError as err:
        print(f"error: {err}", file=sys.stderr)
        return 3


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
