"""Command-line pipeline: synth -> clean -> features -> cv -> train -> eval -> report."""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from .events import (
    CsvRowError,
    CsvSchemaError,
    Stage,
    clean_events,
    dump_events,
    load_events,
    sort_by_start,
)
from .features import FeatureSpec, assemble_features, read_feature_csv, write_feature_csv
from .models import (
    HyperParams,
    feature_importance,
    load_model,
    predict,
    save_model,
)
from .synth import SynthConfig, generate_workload
from .validation import (
    CvConfig,
    HyperParamSpace,
    fit_family,
    chronological_split,
    nested_cv,
)


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _read_json(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _load_features(path: str):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return read_feature_csv(fh)


def _cmd_synth(args: argparse.Namespace) -> int:
    config = SynthConfig(
        n_events=args.n,
        n_instruments=args.instruments,
        ar_rho=args.rho,
        state_sigma=args.state_sigma,
        noise_mbs=args.noise,
        delayed_stream_prob=args.delay_prob,
        stage=Stage(args.stage),
        inject_oversize=args.inject_oversize,
        inject_zero=args.inject_zero,
        seed=args.seed,
    )
    events, _ = generate_workload(config)
    dump_events(events, args.out)
    sidecar = args.sidecar or str(Path(args.out).with_suffix(".meta.json"))
    _write_json(sidecar, {"config": config.to_dict(), "seed": config.seed})
    print(f"wrote {len(events)} events to {args.out}")
    return 0


def _cmd_clean(args: argparse.Namespace) -> int:
    events = load_events(args.input)
    kept, report = clean_events(events)
    dump_events(kept, args.out)
    payload = {
        "n_input": report.n_input,
        "n_oversize_removed": report.n_oversize_removed,
        "n_zero_removed": report.n_zero_removed,
        "n_output": report.n_output,
    }
    if args.report:
        _write_json(args.report, payload)
    print(
        f"cleaned {report.n_input} -> {report.n_output} events "
        f"({report.n_oversize_removed} oversize, {report.n_zero_removed} zero-valued)"
    )
    return 0


def _cmd_features(args: argparse.Namespace) -> int:
    events = load_events(args.input)
    if args.stage:
        stage = Stage(args.stage)
        events = [e for e in events if e.stage is stage]
    events = sort_by_start(events)
    spec = FeatureSpec.parse(args.groups)
    matrix = assemble_features(events, spec, tz_offset_hours=args.tz_offset_hours)
    targets = np.array([e.transfer_rate_mbs for e in events])
    meta_path = args.meta or str(Path(args.out).with_suffix(".meta.json"))
    with open(args.out, "w", encoding="utf-8", newline="") as fh, open(
        meta_path, "w", encoding="utf-8"
    ) as mh:
        write_feature_csv(
            matrix,
            targets,
            fh,
            mh,
            extra_meta={
                "groups": spec.sorted_groups(),
                "tz_offset_hours": args.tz_offset_hours,
                "stage": args.stage or "all",
            },
        )
    print(f"wrote {matrix.values.shape[0]}x{matrix.values.shape[1]} matrix to {args.out}")
    return 0


def _space_from_file(path: str | None) -> HyperParamSpace:
    if path is None:
        return HyperParamSpace()
    raw = _read_json(path)
    kwargs = {k: tuple(v) for k, v in raw.items()}
    return HyperParamSpace(**kwargs)


def _cmd_cv(args: argparse.Namespace) -> int:
    t0 = time.monotonic()
    X, _, _, y = _load_features(args.features)
    config = CvConfig(
        num_params=args.num_params,
        k=args.cv_k,
        train_width=args.train_width,
        test_width=args.test_width,
        train_size=args.train_size,
        test_size=args.test_size,
        seed=args.seed,
    )
    result = nested_cv(X, y, config, _space_from_file(args.space), family=args.family)
    payload = {
        "format_version": 1,
        "family": args.family,
        "config": {
            "num_params": config.num_params,
            "k": config.k,
            "train_width": config.train_width,
            "test_width": config.test_width,
            "train_size": config.train_size,
            "test_size": config.test_size,
            "seed": config.seed,
        },
        **result.to_dict(),
        "timing": {"wall_s": round(time.monotonic() - t0, 3)},
    }
    _write_json(args.out, payload)
    best = result.best_params
    print(
        f"best candidate {result.best_index}: mean RMSE "
        f"{result.mean_rmse[result.best_index]:.4f} MB/s "
        f"(depth={best.max_depth}, trees={best.n_estimators}, lr={best.learning_rate:.4f})"
    )
    return 0


def _resolve_params(args: argparse.Namespace) -> HyperParams:
    if args.params and args.from_cv:
        raise ValueError("pass either --params or --from-cv, not both")
    if args.params:
        return HyperParams.from_dict(_read_json(args.params))
    if args.from_cv:
        return HyperParams.from_dict(_read_json(args.from_cv)["best_params"])
    return HyperParams()


def _cmd_train(args: argparse.Namespace) -> int:
    X, names, _, y = _load_features(args.features)
    params = _resolve_params(args)
    n_train = chronological_split(X.shape[0], args.split)
    rng = np.random.default_rng(args.seed)
    if args.train_subset is not None:
        if args.train_subset > n_train:
            raise ValueError(f"train_subset {args.train_subset} exceeds side of {n_train}")
        rows = np.sort(rng.choice(n_train, size=args.train_subset, replace=False))
    else:
        rows = np.arange(n_train)
    model = fit_family(args.family, X[rows], y[rows], params, names)
    save_model(model, args.out)
    print(f"trained {args.family} on {rows.size} rows, saved to {args.out}")
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    t0 = time.monotonic()
    X, names, event_ids, y = _load_features(args.features)
    model = load_model(args.model)
    if names != model.feature_names:
        raise ValueError("feature columns do not match the model's training columns")
    n_train = chronological_split(X.shape[0], args.split)
    rng = np.random.default_rng(args.seed)
    n_test_side = X.shape[0] - n_train
    if args.test_subset is not None:
        if args.test_subset > n_test_side:
            raise ValueError(f"test_subset {args.test_subset} exceeds side of {n_test_side}")
        rows = np.sort(n_train + rng.choice(n_test_side, size=args.test_subset, replace=False))
    else:
        rows = np.arange(n_train, X.shape[0])
    preds = predict(model, X[rows])
    actual = y[rows]
    score = float(np.sqrt(np.mean((preds - actual) ** 2)))
    if args.pairs:
        with open(args.pairs, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["event_id", "actual_mbs", "predicted_mbs"])
            for i, row in enumerate(rows):
                writer.writerow(
                    [int(event_ids[row]), format(actual[i], ".17g"), format(preds[i], ".17g")]
                )
    if args.out:
        _write_json(
            args.out,
            {
                "rmse_mbs": score,
                "n_test": int(rows.size),
                "split": args.split,
                "test_subset": args.test_subset,
                "seed": args.seed,
                "timing": {"wall_s": round(time.monotonic() - t0, 3)},
            },
        )
    print(f"holdout RMSE: {score:.4f} MB/s over {rows.size} rows")
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    report: dict = {"format_version": 1}
    timing: dict = {}
    if args.clean_report:
        report["cleaning"] = _read_json(args.clean_report)
    if args.features_meta:
        meta = _read_json(args.features_meta)
        report["feature_spec"] = {
            "groups": meta.get("groups"),
            "n_columns": len(meta.get("column_meta", [])),
            "tz_offset_hours": meta.get("tz_offset_hours"),
            "stage": meta.get("stage"),
        }
    if args.cv:
        cv = _read_json(args.cv)
        report["cv"] = {
            "best_index": cv.get("best_index"),
            "best_params": cv.get("best_params"),
            "mean_rmse": cv.get("mean_rmse"),
        }
        if "timing" in cv:
            timing["cv_wall_s"] = cv["timing"].get("wall_s")
    if args.eval:
        holdout = _read_json(args.eval)
        if "timing" in holdout:
            timing["eval_wall_s"] = holdout.pop("timing").get("wall_s")
        report["holdout"] = holdout
    if timing:
        report["timing"] = timing
    if args.model:
        model = load_model(args.model)
        ranked = feature_importance(model)[: args.top]
        report["top_importances"] = [
            {"feature": name, "share": share} for name, share in ranked
        ]
    _write_json(args.out, report)

    print("run report")
    print("----------")
    if "cleaning" in report:
        c = report["cleaning"]
        print(
            f"cleaning: {c['n_input']} in, {c['n_output']} out "
            f"({c['n_oversize_removed']} oversize, {c['n_zero_removed']} zero)"
        )
    if "feature_spec" in report:
        fs = report["feature_spec"]
        print(f"features: groups={','.join(fs['groups'] or [])} columns={fs['n_columns']}")
    if "holdout" in report:
        print(f"holdout RMSE: {report['holdout']['rmse_mbs']:.4f} MB/s")
    if "top_importances" in report:
        print("top feature importances:")
        for entry in report["top_importances"]:
            print(f"  {entry['share'] * 100:7.3f}%  {entry['feature']}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ratecast",
        description="Predict file-transfer rates from transfer-event logs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic transfer log")
    p.add_argument("--out", required=True)
    p.add_argument("--sidecar", default=None, help="config/seed JSON path")
    p.add_argument("--n", type=int, default=10000)
    p.add_argument("--instruments", type=int, default=7)
    p.add_argument("--rho", type=float, default=0.95)
    p.add_argument("--state-sigma", type=float, default=0.25)
    p.add_argument("--noise", type=float, default=4.0)
    p.add_argument("--delay-prob", type=float, default=0.08)
    p.add_argument("--stage", default="DSS_TO_FFB", choices=[s.value for s in Stage])
    p.add_argument("--inject-oversize", type=int, default=0)
    p.add_argument("--inject-zero", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("clean", help="apply the cleaning rules to a log")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report", default=None, help="cleaning report JSON path")
    p.set_defaults(func=_cmd_clean)

    p = sub.add_parser("features", help="assemble the feature matrix")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--meta", default=None, help="sidecar column-meta JSON path")
    p.add_argument("--groups", default="A", help="comma-separated feature groups")
    p.add_argument("--stage", default=None, choices=[s.value for s in Stage])
    p.add_argument("--tz-offset-hours", type=float, default=0.0)
    p.set_defaults(func=_cmd_features)

    p = sub.add_parser("cv", help="nested cross-validation hyperparameter search")
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--family", default="gbt", choices=["gbt", "rf"])
    p.add_argument("--num-params", type=int, default=10)
    p.add_argument("--cv-k", type=int, default=10)
    p.add_argument("--train-width", type=int, default=20000)
    p.add_argument("--test-width", type=int, default=2000)
    p.add_argument("--train-size", type=int, default=5000)
    p.add_argument("--test-size", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--space", default=None, help="JSON file of sampling ranges")
    p.set_defaults(func=_cmd_cv)

    p = sub.add_parser("train", help="train a model on the chronological train side")
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--family", default="gbt", choices=["gbt", "rf"])
    p.add_argument("--params", default=None, help="hyperparameters JSON file")
    p.add_argument("--from-cv", default=None, help="cv result JSON; use its best_params")
    p.add_argument("--holdout", dest="split", type=float, default=0.9)
    p.add_argument("--train-subset", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a model on the chronological test side")
    p.add_argument("--features", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", default=None, help="eval result JSON path")
    p.add_argument("--pairs", default=None, help="predicted-vs-actual CSV path")
    p.add_argument("--holdout", dest="split", type=float, default=0.9)
    p.add_argument("--test-subset", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("report", help="collect artifacts into a run report")
    p.add_argument("--out", required=True)
    p.add_argument("--clean-report", default=None)
    p.add_argument("--features-meta", default=None)
    p.add_argument("--cv", default=None)
    p.add_argument("--model", default=None)
    p.add_argument("--eval", default=None)
    p.add_argument("--top", type=int, default=10)
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CsvSchemaError, CsvRowError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
