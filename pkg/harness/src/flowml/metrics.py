"""Classification metrics computed from a confusion matrix.

Conventions: rows are true classes, columns are predictions.  Per-class
precision, recall, and F1 are one-vs-rest; any 0/0 is reported as 0.
Macro averages are arithmetic means over classes, weighted averages are
support-weighted.  Everything is recomputable from the emitted matrix
alone, which the tests rely on.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np


def confusion_matrix(y_true: np.ndarray, y_pred: np.ndarray,
                     n_classes: int) -> np.ndarray:
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (np.asarray(y_true, dtype=np.int64),
                   np.asarray(y_pred, dtype=np.int64)), 1)
    return cm


def _safe_div(num: float, den: float) -> float:
    return num / den if den else 0.0


def metrics_from_confusion(cm: np.ndarray, classes: Sequence[str]) -> dict:
    """Full metrics report as plain Python types."""
    cm = np.asarray(cm, dtype=np.int64)
    total = int(cm.sum())
    supports = cm.sum(axis=1)
    predicted = cm.sum(axis=0)

    per_class: dict[str, dict] = {}
    for i, name in enumerate(classes):
        tp = int(cm[i, i])
        precision = _safe_div(tp, int(predicted[i]))
        recall = _safe_div(tp, int(supports[i]))
        f1 = _safe_div(2 * precision * recall, precision + recall)
        per_class[name] = {
            "precision": precision,
            "recall": recall,
            "f1": f1,
            "support": int(supports[i]),
        }

    k = len(classes)
    macro = {m: sum(per_class[c][m] for c in classes) / k
             for m in ("precision", "recall", "f1")}
    weighted = {m: _safe_div(sum(per_class[c][m] * per_class[c]["support"]
                                 for c in classes), total)
                for m in ("precision", "recall", "f1")}

    return {
        "accuracy": _safe_div(int(np.trace(cm)), total),
        "per_class": per_class,
        "macro": macro,
        "weighted": weighted,
        "confusion_matrix": cm.tolist(),
        "confusion_matrix_labels": list(classes),
    }


def evaluate_predictions(y_true: np.ndarray, y_pred: np.ndarray,
                         classes: Sequence[str]) -> dict:
    cm = confusion_matrix(y_true, y_pred, len(classes))
    return metrics_from_confusion(cm, classes)


def write_confusion_csv(cm: np.ndarray, classes: Sequence[str], sink) -> None:
    """Matrix as CSV: header of predicted labels, one row per true label."""
    sink.write("true\\predicted," + ",".join(classes) + "\n")
    for name, row in zip(classes, np.asarray(cm)):
        sink.write(name + "," + ",".join(str(int(v)) for v in row) + "\n")
