"""Labeled dataset loading and stratified splitting.

The input is a flow CSV in the meter's documented format: an optional
`# nettisa-csv v1` tag line, a header row, then one row per flow.  The
feature matrix is the 20-column enhanced set below; identity columns and
raw counters in the file are ignored.  Rows with an empty label cell are
skipped, since the meter exports every flow it sees whether or not the
truth file covered it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FEATURE_COLUMNS: tuple[str, ...] = (
    "mean", "min", "max", "stdev", "rms", "avg_dispersion", "kurtosis",
    "mean_relative_times", "mean_time_differences", "min_time_differences",
    "max_time_differences", "time_distribution", "switching_ratio",
    "max_minus_min", "percent_deviation", "variance", "burstiness",
    "coef_variation", "directions", "duration",
)


@dataclass
class Dataset:
    """Feature matrix plus encoded labels.

    `y` holds indices into `classes`, which is sorted so that encoding is
    reproducible from the label strings alone.
    """

    X: np.ndarray
    y: np.ndarray
    classes: tuple[str, ...]
    feature_names: tuple[str, ...] = FEATURE_COLUMNS

    def __len__(self) -> int:
        return len(self.y)

    def subset(self, idx: np.ndarray) -> "Dataset":
        return Dataset(self.X[idx], self.y[idx], self.classes, self.feature_names)


def load_dataset(path: str, label_column: str = "label") -> Dataset:
    """Read a labeled flow CSV into a Dataset.

    A missing feature or label column is a fatal error naming the column;
    so is a cell that does not parse as a number.
    """
    header: list[str] | None = None
    features: list[list[float]] = []
    labels: list[str] = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            cells = line.split(",")
            if header is None:
                header = cells
                for name in FEATURE_COLUMNS + (label_column,):
                    if name not in header:
                        raise ValueError(f"{path}: missing required column {name!r}")
                positions = [header.index(n) for n in FEATURE_COLUMNS]
                label_pos = header.index(label_column)
                continue
            if len(cells) != len(header):
                raise ValueError(f"{path}:{lineno}: expected {len(header)} cells, "
                                 f"found {len(cells)}")
            label = cells[label_pos]
            if not label:
                continue
            try:
                features.append([float(cells[p]) for p in positions])
            except ValueError:
                bad = next(n for n, p in zip(FEATURE_COLUMNS, positions)
                           if not _is_number(cells[p]))
                raise ValueError(
                    f"{path}:{lineno}: bad value for column {bad!r}") from None
            labels.append(label)
    if header is None:
        raise ValueError(f"{path}: empty CSV, no header row")

    classes = tuple(sorted(set(labels)))
    index = {name: i for i, name in enumerate(classes)}
    X = np.asarray(features, dtype=np.float64).reshape(len(labels), len(FEATURE_COLUMNS))
    y = np.asarray([index[v] for v in labels], dtype=np.int64)
    return Dataset(X, y, classes)


def _is_number(text: str) -> bool:
    try:
        float(text)
        return True
    except ValueError:
        return False


def split_dataset(ds: Dataset, ratios: tuple[float, ...] = (0.6, 0.2, 0.2),
                  seed: int = 0) -> tuple[Dataset, ...]:
    """Stratified split into len(ratios) parts.

    Per-class rows are shuffled under the seed and allocated by largest
    remainder, so each part's class ratio tracks the full dataset and the
    result is identical across runs.  Every part receives at least one row
    of every class; a class with fewer rows than parts is an error.
    """
    if not ratios or abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError("split ratios must sum to 1")
    if min(ratios) <= 0:
        raise ValueError("split ratios must be positive")
    parts = len(ratios)
    rng = np.random.default_rng(seed)

    assigned: list[list[np.ndarray]] = [[] for _ in ratios]
    for c, name in enumerate(ds.classes):
        rows = np.flatnonzero(ds.y == c)
        if len(rows) < parts:
            raise ValueError(f"class {name!r} has {len(rows)} rows, "
                             f"fewer than the {parts} split parts")
        rows = rng.permutation(rows)
        counts = _largest_remainder(len(rows), ratios)
        start = 0
        for p, count in enumerate(counts):
            assigned[p].append(rows[start:start + count])
            start += count

    out = []
    for chunks in assigned:
        idx = np.sort(np.concatenate(chunks))
        out.append(ds.subset(idx))
    return tuple(out)


def _largest_remainder(n: int, ratios: tuple[float, ...]) -> list[int]:
    """Integer allocation of n by ratio, each part at least 1."""
    exact = [n * r for r in ratios]
    counts = [max(1, int(e)) for e in exact]
    while sum(counts) > n:  # the minimums can overshoot tiny n
        counts[counts.index(max(counts))] -= 1
    remainder = n - sum(counts)
    by_frac = sorted(range(len(ratios)),
                     key=lambda i: (counts[i] - exact[i], i))
    for k in range(remainder):
        counts[by_frac[k % len(ratios)]] += 1
    return counts
