"""Random hyperparameter search with a validation F1 objective.

Each trial draws the seven searched parameters uniformly from their
documented ranges (integers inclusive) and trains on the train part; the
objective is the positive-class F1 for binary tasks and the weighted
F1 for multiclass.  Ties go to the earliest trial.  A budget of 1 skips
sampling and trains once with the range midpoints, which are the
BoostParams defaults.  The returned model is refit on the train part
under the winning trial's own seed, so it equals the trial that won.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .boosting import SEARCH_RANGES, BoostParams, BoostedTreesClassifier
from .data import Dataset
from .metrics import evaluate_predictions


@dataclass
class Trial:
    index: int
    params: BoostParams
    score: float


def sample_params(rng: np.random.Generator) -> BoostParams:
    r = SEARCH_RANGES
    return BoostParams(
        n_estimators=int(rng.integers(r["n_estimators"][0], r["n_estimators"][1] + 1)),
        max_depth=int(rng.integers(r["max_depth"][0], r["max_depth"][1] + 1)),
        gamma=float(rng.uniform(*r["gamma"])),
        reg_alpha=float(rng.uniform(*r["reg_alpha"])),
        reg_lambda=float(rng.uniform(*r["reg_lambda"])),
        min_child_weight=int(rng.integers(r["min_child_weight"][0],
                                          r["min_child_weight"][1] + 1)),
        colsample_bytree=float(rng.uniform(*r["colsample_bytree"])),
    )


def objective_score(task: str, y_true: np.ndarray, y_pred: np.ndarray,
                    classes: tuple[str, ...]) -> float:
    report = evaluate_predictions(y_true, y_pred, classes)
    if task == "binary":
        # positive class = the lexicographically later label
        return report["per_class"][classes[1]]["f1"]
    return report["weighted"]["f1"]


def tune_and_train(train: Dataset, validation: Dataset, task: str,
                   budget: int, seed: int
                   ) -> tuple[BoostedTreesClassifier, list[Trial]]:
    if budget < 1:
        raise ValueError("search budget must be at least 1")
    if task == "binary" and len(train.classes) != 2:
        raise ValueError(f"binary task needs 2 classes, data has {len(train.classes)}")
    if len(np.unique(train.y)) < 2:
        raise ValueError("training data has a single class")

    if budget == 1:
        candidates = [BoostParams()]
    else:
        rng = np.random.default_rng(seed)
        candidates = [sample_params(rng) for _ in range(budget)]

    trials: list[Trial] = []
    best: Trial | None = None
    for i, params in enumerate(candidates):
        model = BoostedTreesClassifier(params, seed=_trial_seed(seed, i))
        model.fit(train.X, train.y)
        score = objective_score(task, validation.y, model.predict(validation.X),
                                train.classes)
        trial = Trial(i, params, score)
        trials.append(trial)
        if best is None or trial.score > best.score:
            best = trial

    final = BoostedTreesClassifier(best.params, seed=_trial_seed(seed, best.index))
    final.fit(train.X, train.y)
    return final, trials


def _trial_seed(seed: int, index: int) -> int:
    # collapsed to an int so the model file can record it
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])
