"""Model persistence: one JSON document per trained model.

The file carries everything evaluate needs: task, class names, feature
names, the winning hyperparameters, and the flat node arrays of every
tree.  Loading reconstructs a classifier whose predictions and feature
importances are bit-identical to the saved one.
"""

from __future__ import annotations

import json
import os

from .boosting import BoostedTreesClassifier, BoostParams, Tree

MODEL_FORMAT = "flowml-model v1"
MODEL_FILE = "model.json"


def save_model(out_dir: str, model: BoostedTreesClassifier, task: str,
               classes: tuple[str, ...], feature_names: tuple[str, ...],
               label_column: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    doc = {
        "format": MODEL_FORMAT,
        "task": task,
        "classes": list(classes),
        "feature_names": list(feature_names),
        "label_column": label_column,
        "params": model.params.to_dict(),
        "seed": model.seed,
        "n_classes": model.n_classes,
        "n_features": model.n_features,
        "trees": [t.to_dict() for t in model.trees],
    }
    path = os.path.join(out_dir, MODEL_FILE)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f)
        f.write("\n")
    return path


def load_model(model_dir: str) -> tuple[BoostedTreesClassifier, dict]:
    """Returns the classifier and the metadata block."""
    path = os.path.join(model_dir, MODEL_FILE)
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError(f"{path}: not a {MODEL_FORMAT} file")

    model = BoostedTreesClassifier(BoostParams(**doc["params"]), seed=doc["seed"])
    model.n_classes = doc["n_classes"]
    model.n_features = doc["n_features"]
    model.trees = [Tree.from_dict(t) for t in doc["trees"]]
    meta = {k: doc[k] for k in ("task", "classes", "feature_names", "label_column")}
    return model, meta
