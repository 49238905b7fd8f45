"""Newton-boosted decision trees for classification.

Second-order boosting on the logistic loss (softmax for multiclass, one
tree per class per round).  The regularized split gain is

    0.5 * (score(L) + score(R) - score(parent)) - gamma,
    score(G, H) = T(G, reg_alpha)^2 / (H + reg_lambda),

where T is the L1 soft-threshold, and a leaf's weight is
-learning_rate * T(G, reg_alpha) / (H + reg_lambda).  A split must have
positive gain and leave at least min_child_weight of hessian mass on each
side; colsample_bytree draws the feature subset each tree may use.  These
are the standard semantics of the seven searched hyperparameters in
gradient-boosting libraries; everything else is fixed at conventional
defaults (learning rate 0.3, raw scores start at 0).
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

# Documented search ranges; the dataclass defaults are their midpoints.
SEARCH_RANGES = {
    "n_estimators": (50, 500),
    "max_depth": (3, 12),
    "gamma": (0.0, 5.0),
    "reg_alpha": (0.0, 5.0),
    "reg_lambda": (0.0, 5.0),
    "min_child_weight": (1, 10),
    "colsample_bytree": (0.5, 1.0),
}


@dataclass
class BoostParams:
    n_estimators: int = 275
    max_depth: int = 7
    gamma: float = 2.5
    reg_alpha: float = 2.5
    reg_lambda: float = 2.5
    min_child_weight: float = 5
    colsample_bytree: float = 0.75
    learning_rate: float = 0.3

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Tree:
    """Flat node arrays; feature -1 marks a leaf."""

    feature: list[int] = field(default_factory=list)
    threshold: list[float] = field(default_factory=list)
    left: list[int] = field(default_factory=list)
    right: list[int] = field(default_factory=list)
    value: list[float] = field(default_factory=list)
    gain: list[float] = field(default_factory=list)
    class_index: int = 0

    def add_leaf(self, weight: float) -> int:
        return self._add(-1, 0.0, -1, -1, weight, 0.0)

    def add_split(self, feature: int, threshold: float, gain: float) -> int:
        return self._add(feature, threshold, -1, -1, 0.0, gain)

    def _add(self, f: int, t: float, l: int, r: int, v: float, g: float) -> int:
        self.feature.append(f)
        self.threshold.append(t)
        self.left.append(l)
        self.right.append(r)
        self.value.append(v)
        self.gain.append(g)
        return len(self.feature) - 1

    def predict(self, X: np.ndarray) -> np.ndarray:
        feature = np.asarray(self.feature, dtype=np.int64)
        threshold = np.asarray(self.threshold)
        left = np.asarray(self.left, dtype=np.int64)
        right = np.asarray(self.right, dtype=np.int64)
        value = np.asarray(self.value)

        node = np.zeros(len(X), dtype=np.int64)
        active = feature[node] >= 0
        while active.any():
            rows = np.flatnonzero(active)
            at = node[rows]
            goes_left = X[rows, feature[at]] < threshold[at]
            node[rows] = np.where(goes_left, left[at], right[at])
            active = feature[node] >= 0
        return value[node]

    def to_dict(self) -> dict:
        return {
            "feature": list(self.feature),
            "threshold": list(self.threshold),
            "left": list(self.left),
            "right": list(self.right),
            "value": list(self.value),
            "gain": list(self.gain),
            "class_index": self.class_index,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        return cls(**d)


def _soft_threshold(g: float, alpha: float) -> float:
    if g > alpha:
        return g - alpha
    if g < -alpha:
        return g + alpha
    return 0.0


class _TreeBuilder:
    """Grows one tree on (gradient, hessian) with presorted feature orders."""

    def __init__(self, X: np.ndarray, order: np.ndarray, params: BoostParams):
        self.X = X
        self.order = order  # order[:, f] = row indices sorted by feature f
        self.p = params

    def _score(self, G: np.ndarray, H: np.ndarray) -> np.ndarray:
        t = np.sign(G) * np.maximum(np.abs(G) - self.p.reg_alpha, 0.0)
        den = H + self.p.reg_lambda
        return np.where(den > 0, t * t / np.where(den > 0, den, 1.0), 0.0)

    def _leaf_weight(self, G: float, H: float) -> float:
        den = H + self.p.reg_lambda
        if den <= 0:
            return 0.0
        return -self.p.learning_rate * _soft_threshold(G, self.p.reg_alpha) / den

    def _best_split(self, member: np.ndarray, columns: np.ndarray,
                    g: np.ndarray, h: np.ndarray):
        """Returns (gain, feature, threshold) or None."""
        best = None
        for f in columns:
            of = self.order[:, f]
            rows = of[member[of]]
            if len(rows) < 2:
                return None
            vals = self.X[rows, f]
            gc = np.cumsum(g[rows])
            hc = np.cumsum(h[rows])
            G, H = gc[-1], hc[-1]

            boundary = np.flatnonzero(vals[:-1] < vals[1:])
            if len(boundary) == 0:
                continue
            GL, HL = gc[boundary], hc[boundary]
            GR, HR = G - GL, H - HL
            ok = (HL >= self.p.min_child_weight) & (HR >= self.p.min_child_weight)
            if not ok.any():
                continue
            parent = self._score(np.array([G]), np.array([H]))[0]
            gains = 0.5 * (self._score(GL, HL) + self._score(GR, HR)
                           - parent) - self.p.gamma
            gains = np.where(ok, gains, -np.inf)
            i = int(np.argmax(gains))
            if gains[i] <= 0:
                continue
            threshold = (vals[boundary[i]] + vals[boundary[i] + 1]) / 2.0
            if best is None or gains[i] > best[0]:
                best = (float(gains[i]), int(f), float(threshold))
        return best

    def build(self, g: np.ndarray, h: np.ndarray, columns: np.ndarray,
              class_index: int) -> Tree:
        tree = Tree(class_index=class_index)
        root_member = np.ones(len(self.X), dtype=bool)
        self._grow(tree, None, False, root_member, columns, g, h, depth=0)
        return tree

    def _grow(self, tree: Tree, parent: int | None, is_right: bool,
              member: np.ndarray, columns: np.ndarray,
              g: np.ndarray, h: np.ndarray, depth: int) -> None:
        split = None
        if depth < self.p.max_depth:
            split = self._best_split(member, columns, g, h)

        if split is None:
            G = float(g[member].sum())
            H = float(h[member].sum())
            node = tree.add_leaf(self._leaf_weight(G, H))
        else:
            gain, f, threshold = split
            node = tree.add_split(f, threshold, gain)

        if parent is not None:
            if is_right:
                tree.right[parent] = node
            else:
                tree.left[parent] = node
        if split is None:
            return

        goes_left = member & (self.X[:, f] < threshold)
        goes_right = member & ~goes_left
        self._grow(tree, node, False, goes_left, columns, g, h, depth + 1)
        self._grow(tree, node, True, goes_right, columns, g, h, depth + 1)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(z, -35.0, 35.0)))


def _softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


class BoostedTreesClassifier:
    """Tree ensemble trained by Newton boosting on logistic/softmax loss.

    Binary targets train one tree per round; K-class targets train K.
    Deterministic for a given (data, params, seed).
    """

    def __init__(self, params: BoostParams | None = None, seed: int = 0):
        self.params = params or BoostParams()
        self.seed = seed
        self.trees: list[Tree] = []
        self.n_classes = 0
        self.n_features = 0

    def fit(self, X: np.ndarray, y: np.ndarray) -> "BoostedTreesClassifier":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        self.n_classes = int(y.max()) + 1 if len(y) else 0
        if len(np.unique(y)) < 2:
            raise ValueError("training data has a single class")
        self.n_features = X.shape[1]
        rng = np.random.default_rng(self.seed)

        order = np.argsort(X, axis=0, kind="stable")
        builder = _TreeBuilder(X, order, self.params)
        n_cols = max(1, round(self.params.colsample_bytree * self.n_features))

        k = 1 if self.n_classes == 2 else self.n_classes
        raw = np.zeros((len(X), k))
        onehot = None
        if k > 1:
            onehot = np.zeros((len(X), k))
            onehot[np.arange(len(X)), y] = 1.0

        self.trees = []
        for _ in range(self.params.n_estimators):
            if k == 1:
                p = _sigmoid(raw[:, 0])
                grads = [(p - y, p * (1.0 - p), 0)]
            else:
                p = _softmax(raw)
                grads = [(p[:, c] - onehot[:, c], p[:, c] * (1.0 - p[:, c]), c)
                         for c in range(k)]
            for g, h, c in grads:
                columns = np.sort(rng.choice(self.n_features, size=n_cols,
                                             replace=False))
                tree = builder.build(g, h, columns, c)
                self.trees.append(tree)
                raw[:, c] += tree.predict(X)
        return self

    def predict_raw(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        k = 1 if self.n_classes == 2 else self.n_classes
        raw = np.zeros((len(X), k))
        for tree in self.trees:
            raw[:, tree.class_index] += tree.predict(X)
        return raw

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        raw = self.predict_raw(X)
        if self.n_classes == 2:
            p1 = _sigmoid(raw[:, 0])
            return np.column_stack([1.0 - p1, p1])
        return _softmax(raw)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)

    def feature_importance(self) -> list[tuple[int, float, int]]:
        """(feature index, mean gain per split, split count), best first.

        A model whose trees never split reports an empty table.
        """
        total: dict[int, float] = {}
        count: dict[int, int] = {}
        for tree in self.trees:
            for f, gain in zip(tree.feature, tree.gain):
                if f >= 0:
                    total[f] = total.get(f, 0.0) + gain
                    count[f] = count.get(f, 0) + 1
        table = [(f, total[f] / count[f], count[f]) for f in total]
        table.sort(key=lambda row: (-row[1], row[0]))
        return table
