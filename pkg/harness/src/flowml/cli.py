"""Command-line interface: train and evaluate.

train splits its labeled CSV into train/validation parts (stratified,
seeded), random-searches the seven boosting hyperparameters, and writes
the winning model plus a search log to the output directory.  evaluate
scores a saved model against a held-out CSV and writes a JSON metrics
report with the confusion matrix alongside as CSV.  Exit codes: 0
success, 1 fatal input error, 2 bad invocation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .data import load_dataset, split_dataset
from .metrics import evaluate_predictions, write_confusion_csv
from .model_io import load_model, save_model
from .tuning import objective_score, tune_and_train

import numpy as np

VALIDATION_FRACTION = 0.25


def cmd_train(args: argparse.Namespace) -> int:
    ds = load_dataset(args.data, args.labels)
    if args.task == "binary" and len(ds.classes) != 2:
        raise ValueError(f"binary task needs exactly 2 classes, "
                         f"found {len(ds.classes)}: {', '.join(ds.classes)}")
    train, validation = split_dataset(
        ds, (1.0 - VALIDATION_FRACTION, VALIDATION_FRACTION), seed=args.seed)

    model, trials = tune_and_train(train, validation, args.task,
                                   args.budget, args.seed)
    save_model(args.out, model, args.task, ds.classes, ds.feature_names,
               args.labels)
    log = {
        "budget": args.budget,
        "seed": args.seed,
        "rows": {"train": len(train), "validation": len(validation)},
        "trials": [{"index": t.index, "score": t.score,
                    "params": t.params.to_dict()} for t in trials],
        "best_index": max(trials, key=lambda t: (t.score, -t.index)).index,
    }
    with open(os.path.join(args.out, "search.json"), "w", encoding="utf-8") as f:
        json.dump(log, f, indent=2)
        f.write("\n")

    best = max(trials, key=lambda t: (t.score, -t.index))
    print(f"trained on {len(train)} rows, validated on {len(validation)}; "
          f"best of {len(trials)} trial(s): F1 {best.score:.4f}", file=sys.stderr)
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    model, meta = load_model(args.model)
    ds = load_dataset(args.data, meta["label_column"])
    if len(ds) == 0:
        raise ValueError(f"{args.data}: no labeled rows to evaluate")
    unknown = set(ds.classes) - set(meta["classes"])
    if unknown:
        raise ValueError(f"{args.data}: labels not seen in training: "
                         f"{', '.join(sorted(unknown))}")

    # re-encode against the model's class order
    classes = tuple(meta["classes"])
    remap = np.asarray([classes.index(ds.classes[c]) for c in range(len(ds.classes))],
                       dtype=np.int64)
    y_true = remap[ds.y]
    y_pred = model.predict(ds.X)

    report = evaluate_predictions(y_true, y_pred, classes)
    report["task"] = meta["task"]
    report["rows"] = len(ds)
    report["objective_f1"] = objective_score(meta["task"], y_true, y_pred, classes)
    names = meta["feature_names"]
    report["feature_importance"] = [
        {"feature": names[f], "mean_gain": gain, "splits": count}
        for f, gain, count in model.feature_importance()
    ]
    with open(args.report, "w", encoding="utf-8") as f:
        json.dump(report, f, indent=2)
        f.write("\n")
    cm_path = os.path.splitext(args.report)[0] + ".confusion.csv"
    with open(cm_path, "w", encoding="utf-8") as f:
        write_confusion_csv(np.asarray(report["confusion_matrix"]), classes, f)

    print(f"rows {len(ds)}  accuracy {report['accuracy']:.4f}  "
          f"objective F1 {report['objective_f1']:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flowml",
        description="Train and evaluate flow-record classifiers.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="search hyperparameters and fit a model")
    p.add_argument("--data", required=True, help="labeled enhanced CSV")
    p.add_argument("--labels", default="label",
                   help="name of the label column (default 'label')")
    p.add_argument("--task", choices=("binary", "multiclass"), default="binary")
    p.add_argument("--budget", type=int, default=20,
                   help="random-search trials; 1 trains the midpoint defaults")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="model output directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a saved model on a test CSV")
    p.add_argument("--model", required=True, help="model directory from train")
    p.add_argument("--data", required=True, help="labeled test CSV")
    p.add_argument("--report", required=True, help="metrics JSON output path")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
