"""Minimal CART classifier over categorical road features.

Trees are grown by greedy binary splitting. Nominal features split
one-vs-rest on single categories; ordered features (speed and lane bins)
split on thresholds. Leaves keep their training class counts, because the
leaf's label distribution doubles as a feature embedding downstream.

Rows are integer-coded with 0 = missing. Fitting requires complete rows;
prediction routes a missing value to the child that saw more training
samples.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .features import FEATURE_NAMES, ORDINAL_FEATURES, FeatureRecord, record_to_row

DEFAULT_KINDS = tuple("ordinal" if n in ORDINAL_FEATURES else "categorical" for n in FEATURE_NAMES)


@dataclass(frozen=True)
class GridSpec:
    """Hyperparameter grid for cross-validated search."""

    criteria: Tuple[str, ...] = ("gini", "entropy")
    max_depths: Tuple[int, ...] = (1, 2, 3, 4, 5, 6, 7, 8, 9, 10)
    min_samples_splits: Tuple[float, ...] = (0.01, 0.03, 0.05, 0.1, 0.15, 0.2, 2, 4, 6)
    folds: int = 10

    def __post_init__(self):
        if not self.criteria or not self.max_depths or not self.min_samples_splits:
            raise ValueError("grid sets must be non-empty")
        bad = [c for c in self.criteria if c not in ("gini", "entropy")]
        if bad:
            raise ValueError(f"unknown criteria: {bad}")
        if self.folds < 2:
            raise ValueError("folds must be >= 2")


def _impurity(counts: np.ndarray, criterion: str) -> float:
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    if criterion == "gini":
        return float(1.0 - np.sum(p * p))
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def _resolve_min_split(value: float, n_train: int) -> int:
    if value < 1:
        return max(2, math.ceil(value * n_train))
    return max(2, int(value))


class DecisionTree:
    """A fitted CART tree. Nodes are nested dicts, JSON-serializable."""

    def __init__(self, root: dict, n_classes: int, feature_kinds: Sequence[str], n_train: int):
        self.root = root
        self.n_classes = n_classes
        self.feature_kinds = tuple(feature_kinds)
        self.n_train = n_train

    def _route(self, row: np.ndarray) -> dict:
        node = self.root
        while node["kind"] == "split":
            v = int(row[node["feature"]])
            if v == 0:  # missing: follow the heavier child
                node = node["left"] if node["left"]["n"] >= node["right"]["n"] else node["right"]
                continue
            if node["op"] == "le":
                node = node["left"] if v <= node["value"] else node["right"]
            else:
                node = node["left"] if v == node["value"] else node["right"]
        return node

    def leaf_distribution(self, row: np.ndarray) -> np.ndarray:
        """Training-label distribution of the leaf this row routes to."""
        counts = np.asarray(self._route(np.asarray(row, dtype=np.int64))["counts"], dtype=float)
        return counts / counts.sum()

    def predict_row(self, row: np.ndarray) -> int:
        return int(np.argmax(self.leaf_distribution(row))) + 1

    def predict(self, rows: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.int64)
        return np.array([self.predict_row(r) for r in rows], dtype=np.int64)

    def depth(self) -> int:
        def d(node):
            if node["kind"] == "leaf":
                return 0
            return 1 + max(d(node["left"]), d(node["right"]))

        return d(self.root)

    def to_dict(self) -> dict:
        return {
            "n_classes": self.n_classes,
            "feature_kinds": list(self.feature_kinds),
            "n_train": self.n_train,
            "root": self.root,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DecisionTree":
        return cls(data["root"], data["n_classes"], data["feature_kinds"], data["n_train"])

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_json(cls, text: str) -> "DecisionTree":
        return cls.from_dict(json.loads(text))


def _best_split(x: np.ndarray, y0: np.ndarray, kinds, n_classes: int, criterion: str):
    """Best (decrease, feature, op, value, left_mask) over all candidates.

    Candidates are scanned in feature order, thresholds/categories in value
    order; ties keep the first candidate, which makes fits deterministic.
    """
    n = y0.size
    total = np.bincount(y0, minlength=n_classes).astype(float)
    imp_parent = _impurity(total, criterion)
    best = None
    for f, kind in enumerate(kinds):
        col = x[:, f]
        vals = np.unique(col)
        if vals.size < 2:
            continue
        ranks = np.searchsorted(vals, col)
        vc = np.zeros((vals.size, n_classes))
        np.add.at(vc, (ranks, y0), 1.0)
        if kind == "ordinal":
            cum = np.cumsum(vc, axis=0)
            candidates = [(int(vals[t]), "le", cum[t]) for t in range(vals.size - 1)]
        else:
            candidates = [(int(vals[t]), "eq", vc[t]) for t in range(vals.size)]
        for value, op, left in candidates:
            n_left = left.sum()
            if n_left == 0 or n_left == n:
                continue
            right = total - left
            child_imp = (n_left * _impurity(left, criterion) + (n - n_left) * _impurity(right, criterion)) / n
            decrease = imp_parent - child_imp
            if best is None or decrease > best[0] + 1e-12:
                if op == "le":
                    mask = col <= value
                else:
                    mask = col == value
                best = (decrease, f, op, value, mask)
    return best


def fit(
    x: np.ndarray,
    y: Sequence[int],
    feature_kinds: Sequence[str] = DEFAULT_KINDS,
    criterion: str = "gini",
    max_depth: Optional[int] = None,
    min_samples_split: float = 2,
    n_classes: int = 4,
) -> DecisionTree:
    """Grow a tree by greedy impurity-decrease splitting.

    ``min_samples_split`` below 1 is a fraction of the training size,
    otherwise an absolute count. ``max_depth`` of None grows until purity.
    """
    x = np.asarray(x, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    if x.ndim != 2 or y.shape != (x.shape[0],):
        raise ValueError("x must be (n, f) with one label per row")
    if x.shape[0] == 0:
        raise ValueError("cannot fit on empty data")
    if x.shape[1] != len(feature_kinds):
        raise ValueError(f"expected {len(feature_kinds)} feature columns, got {x.shape[1]}")
    if np.any(x == 0):
        raise ValueError("training rows must not contain missing values")
    if np.any((y < 1) | (y > n_classes)):
        raise ValueError(f"labels must be in 1..{n_classes}")
    if criterion not in ("gini", "entropy"):
        raise ValueError(f"criterion must be gini or entropy, got {criterion!r}")

    n_train = x.shape[0]
    min_split = _resolve_min_split(min_samples_split, n_train)
    y0 = y - 1

    def grow(idx: np.ndarray, depth: int) -> dict:
        counts = np.bincount(y0[idx], minlength=n_classes)
        node = {"kind": "leaf", "n": int(idx.size), "counts": counts.tolist()}
        if np.count_nonzero(counts) <= 1:
            return node
        if max_depth is not None and depth >= max_depth:
            return node
        if idx.size < min_split:
            return node
        found = _best_split(x[idx], y0[idx], feature_kinds, n_classes, criterion)
        if found is None:
            return node
        _, f, op, value, mask = found
        return {
            "kind": "split",
            "feature": int(f),
            "op": op,
            "value": int(value),
            "n": int(idx.size),
            "counts": counts.tolist(),
            "left": grow(idx[mask], depth + 1),
            "right": grow(idx[~mask], depth + 1),
        }

    root = grow(np.arange(n_train), 0)
    return DecisionTree(root, n_classes, feature_kinds, n_train)


def fit_records(
    records: Sequence[FeatureRecord],
    labels: Sequence[int],
    criterion: str = "gini",
    max_depth: Optional[int] = None,
    min_samples_split: float = 2,
) -> DecisionTree:
    x = np.stack([record_to_row(r) for r in records])
    return fit(x, labels, DEFAULT_KINDS, criterion, max_depth, min_samples_split)


def leaf_distribution(tree: DecisionTree, rec: FeatureRecord) -> np.ndarray:
    """Leaf label distribution for one feature record (missing fields allowed)."""
    return tree.leaf_distribution(record_to_row(rec))


def stratified_folds(y: Sequence[int], k: int, seed: int = 0) -> List[np.ndarray]:
    """Deterministic stratified k-fold indices (shuffled within class)."""
    y = np.asarray(y, dtype=np.int64)
    if k > y.size:
        raise ValueError(f"cannot make {k} folds from {y.size} samples")
    rng = np.random.default_rng(seed)
    folds: List[List[int]] = [[] for _ in range(k)]
    offset = 0
    for c in np.unique(y):
        idx = np.nonzero(y == c)[0]
        idx = idx[rng.permutation(idx.size)]
        for pos, i in enumerate(idx):
            folds[(pos + offset) % k].append(int(i))
        offset += idx.size % k
    return [np.array(sorted(f), dtype=np.int64) for f in folds]


def grid_search(
    x: np.ndarray,
    y: Sequence[int],
    feature_kinds: Sequence[str] = DEFAULT_KINDS,
    grid: GridSpec = GridSpec(),
    seed: int = 0,
) -> Tuple[Dict, List[Dict]]:
    """Cross-validated grid search; returns (best cell, full score table).

    Each cell's score is the mean fold accuracy under stratified k-fold CV.
    Ties prefer smaller depth, then gini over entropy, then the larger
    resolved min-split (simpler models first).
    """
    x = np.asarray(x, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    folds = stratified_folds(y, grid.folds, seed)
    if any(f.size == 0 for f in folds):
        raise ValueError("a fold came out empty; reduce folds")
    all_idx = np.arange(y.size)
    table: List[Dict] = []
    for criterion in grid.criteria:
        for depth in grid.max_depths:
            for ms in grid.min_samples_splits:
                accs = []
                for fold in folds:
                    test_mask = np.zeros(y.size, dtype=bool)
                    test_mask[fold] = True
                    tr = all_idx[~test_mask]
                    tree = fit(x[tr], y[tr], feature_kinds, criterion, depth, ms)
                    pred = tree.predict(x[fold])
                    accs.append(float(np.mean(pred == y[fold])))
                accs = np.array(accs)
                table.append(
                    {
                        "criterion": criterion,
                        "max_depth": int(depth),
                        "min_samples_split": ms,
                        "mean_accuracy": float(accs.mean()),
                        "std_accuracy": float(accs.std()),
                    }
                )

    crit_rank = {"gini": 0, "entropy": 1}

    def sort_key(row):
        return (
            -row["mean_accuracy"],
            row["max_depth"],
            crit_rank[row["criterion"]],
            -_resolve_min_split(row["min_samples_split"], y.size),
        )

    best = min(table, key=sort_key)
    return dict(best), table
