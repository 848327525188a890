"""Gradient-boosted decision trees for binary classification.

Exact greedy split finding on the second-order logistic loss, XGBoost style
(L2 leaf penalty ``reg_lambda``, ``min_child_weight`` on hessian sums). The
raw score of a row is ``base_score + learning_rate * sum(tree(x))`` and the
fraud probability is its logistic transform.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from . import kernels


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class Tree:
    """Flat node table; node 0 is the root and ``feature[i] < 0`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    gain: np.ndarray

    def __len__(self) -> int:
        return len(self.feature)

    @classmethod
    def leaf(cls, value: float) -> "Tree":
        return cls(np.array([-1]), np.zeros(1), np.array([-1]), np.array([-1]),
                   np.array([float(value)]), np.zeros(1))


@dataclass(frozen=True)
class GbdtModel:
    trees: tuple[Tree, ...]
    learning_rate: float
    base_score: float
    n_features: int

    @cached_property
    def _flat(self):
        feats, thrs, lefts, rights, vals, roots = [], [], [], [], [], []
        offset = 0
        for t in self.trees:
            roots.append(offset)
            feats.append(t.feature)
            thrs.append(t.threshold)
            shift = np.where(t.left >= 0, offset, 0)
            lefts.append(t.left + shift)
            rights.append(t.right + np.where(t.right >= 0, offset, 0))
            vals.append(t.value)
            offset += len(t)
        cat = (lambda xs, dt: np.ascontiguousarray(np.concatenate(xs), dtype=dt) if xs
               else np.zeros(0, dtype=dt))
        return (cat(feats, np.int64), cat(thrs, np.float64), cat(lefts, np.int64),
                cat(rights, np.int64), cat(vals, np.float64), np.asarray(roots, dtype=np.int64))

    def margin(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.n_features:
            raise ModelError(f"expected {self.n_features} features, got {X.shape[1]}")
        return self.base_score + self.learning_rate * kernels.sum_leaves(*self._flat, X)

    def predict_p1(self, X: np.ndarray) -> np.ndarray:
        """Fraud probability for each row of ``X``."""
        return 1.0 / (1.0 + np.exp(-self.margin(X)))


def predict_proba(model: GbdtModel, x: np.ndarray) -> tuple[float, float]:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ModelError("predict_proba takes a single vector")
    p1 = float(model.predict_p1(x[None, :])[0])
    return 1.0 - p1, p1


@dataclass(frozen=True)
class ThresholdedClassifier:
    """Flags fraud when the fraud probability is strictly above ``tau``."""

    model: GbdtModel
    tau: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.tau <= 1.0:
            raise ModelError(f"tau must lie in [0, 1], got {self.tau}")

    def classify(self, X: np.ndarray) -> np.ndarray:
        return (self.model.predict_p1(X) > self.tau).astype(np.int64)


def classify(clf: ThresholdedClassifier, x: np.ndarray) -> int:
    return int(clf.classify(np.asarray(x, dtype=np.float64)[None, :])[0])


# --------------------------------------------------------------------------
# training


@dataclass
class TrainParams:
    rounds: int = 100
    max_depth: int = 3
    learning_rate: float = 0.1
    min_child_weight: float = 1.0
    reg_lambda: float = 1.0
    subsample: float = 1.0
    seed: int = 0

    @classmethod
    def from_dict(cls, d: dict) -> "TrainParams":
        known = {k: d[k] for k in cls.__dataclass_fields__ if k in d}
        return cls(**known)


def _grow(X, g, h, idx, depth, params, nodes):
    node_id = len(nodes)
    nodes.append(None)
    G = float(np.sum(g[idx]))
    H = float(np.sum(h[idx]))
    if depth < params.max_depth and len(idx) >= 2:
        feat, thr, gain = kernels.best_split(X[idx], g[idx], h[idx], params.reg_lambda,
                                             params.min_child_weight)
        if feat >= 0:
            go_left = X[idx, feat] < thr
            left = _grow(X, g, h, idx[go_left], depth + 1, params, nodes)
            right = _grow(X, g, h, idx[~go_left], depth + 1, params, nodes)
            nodes[node_id] = (feat, thr, left, right, 0.0, gain)
            return node_id
    nodes[node_id] = (-1, 0.0, -1, -1, -G / (H + params.reg_lambda), 0.0)
    return node_id


def train(X: np.ndarray, y: np.ndarray, params: TrainParams | None = None) -> GbdtModel:
    """Fit a boosted ensemble; identical inputs and seed give identical trees."""
    params = params or TrainParams()
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or len(X) == 0:
        raise ModelError("training data is empty")
    if len(np.unique(y)) < 2:
        raise ModelError("training data must contain both classes")
    if params.rounds < 0 or params.max_depth < 1 or params.learning_rate <= 0:
        raise ModelError(f"invalid training parameters: {params}")

    prior = float(np.mean(y))
    base = float(np.log(prior / (1.0 - prior)))
    margin = np.full(len(y), base)
    rng = np.random.default_rng(params.seed)
    trees: list[Tree] = []
    all_rows = np.arange(len(y))
    for _ in range(params.rounds):
        p = 1.0 / (1.0 + np.exp(-margin))
        g = p - y
        h = p * (1.0 - p)
        rows = all_rows
        if params.subsample < 1.0:
            k = max(2, int(round(params.subsample * len(y))))
            rows = np.sort(rng.choice(all_rows, size=k, replace=False))
        nodes: list = []
        _grow(X, g, h, rows, 0, params, nodes)
        cols = list(zip(*nodes))
        tree = Tree(np.array(cols[0], dtype=np.int64), np.array(cols[1], dtype=np.float64),
                    np.array(cols[2], dtype=np.int64), np.array(cols[3], dtype=np.int64),
                    np.array(cols[4], dtype=np.float64), np.array(cols[5], dtype=np.float64))
        trees.append(tree)
        margin = margin + params.learning_rate * kernels.sum_leaves(
            tree.feature, tree.threshold, tree.left, tree.right, tree.value,
            np.zeros(1, dtype=np.int64), X)
    return GbdtModel(tuple(trees), params.learning_rate, base, X.shape[1])


def feature_importance(model: GbdtModel) -> np.ndarray:
    """Total split gain per feature, scaled so the largest is 1."""
    imp = np.zeros(model.n_features)
    for t in model.trees:
        split = t.feature >= 0
        np.add.at(imp, t.feature[split], t.gain[split])
    top = imp.max(initial=0.0)
    return imp / top if top > 0 else imp


# --------------------------------------------------------------------------
# threshold tuning


def fbeta(precision: float, recall: float, beta: float = 2.0) -> float:
    if beta <= 0:
        raise ValueError("beta must be positive")
    b2 = beta * beta
    denom = b2 * precision + recall
    if denom == 0:
        return 0.0
    return (1 + b2) * precision * recall / denom


def precision_recall(scores: np.ndarray, labels: np.ndarray, tau: float) -> tuple[float, float]:
    pred = np.asarray(scores) > tau
    labels = np.asarray(labels).astype(bool)
    tp = np.count_nonzero(pred & labels)
    n_pred = np.count_nonzero(pred)
    n_pos = np.count_nonzero(labels)
    precision = tp / n_pred if n_pred else 0.0
    recall = tp / n_pos if n_pos else 0.0
    return precision, recall


def threshold_candidates(scores: np.ndarray) -> np.ndarray:
    u = np.unique(np.asarray(scores, dtype=np.float64))
    mids = 0.5 * (u[:-1] + u[1:])
    return np.unique(np.concatenate([[0.0, 1.0], mids]))


def tune_threshold_scores(scores: np.ndarray, labels: np.ndarray, beta: float = 2.0) -> float:
    labels = np.asarray(labels)
    if len(np.unique(labels)) < 2:
        raise ModelError("threshold tuning needs both classes")
    best_tau, best_f = 0.0, -1.0
    for tau in threshold_candidates(scores):
        f = fbeta(*precision_recall(scores, labels, tau), beta)
        if f >= best_f:  # ascending scan: ties go to the larger tau
            best_tau, best_f = float(tau), f
    return best_tau


def tune_threshold(model: GbdtModel, X: np.ndarray, y: np.ndarray, beta: float = 2.0) -> float:
    return tune_threshold_scores(model.predict_p1(X), y, beta)


# --------------------------------------------------------------------------
# text serialization

_HEADER = "# fraudadv gbdt v1"


def dump_model(model: GbdtModel, path: str | Path, tau: float | None = None) -> None:
    lines = [_HEADER,
             f"base_score {model.base_score!r}",
             f"learning_rate {model.learning_rate!r}",
             f"n_features {model.n_features}"]
    if tau is not None:
        lines.append(f"tau {float(tau)!r}")
    for k, t in enumerate(model.trees):
        lines.append(f"tree {k} {len(t)}")
        for i in range(len(t)):
            if t.feature[i] < 0:
                lines.append(f"{i} leaf {float(t.value[i])!r}")
            else:
                lines.append(f"{i} split {int(t.feature[i])} {float(t.threshold[i])!r} "
                             f"{int(t.left[i])} {int(t.right[i])} {float(t.gain[i])!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> tuple[GbdtModel, float | None]:
    """Read a model file; returns the model and its stored threshold, if any."""
    lines = [ln.strip() for ln in Path(path).read_text(encoding="utf-8").splitlines()]
    if not lines or lines[0] != _HEADER:
        raise ModelError(f"{path}: not a model file")
    meta: dict[str, str] = {}
    trees: list[Tree] = []
    rows: list[list[str]] = []
    expected = 0

    def flush():
        if len(rows) != expected:
            raise ModelError(f"{path}: tree has {len(rows)} nodes, header says {expected}")
        cols = [[-1, 0.0, -1, -1, 0.0, 0.0] for _ in rows]
        for r in rows:
            i = int(r[0])
            if r[1] == "leaf":
                cols[i] = [-1, 0.0, -1, -1, float(r[2]), 0.0]
            else:
                cols[i] = [int(r[2]), float(r[3]), int(r[4]), int(r[5]), 0.0, float(r[6])]
        c = list(zip(*cols))
        trees.append(Tree(np.array(c[0], dtype=np.int64), np.array(c[1]), np.array(c[2], dtype=np.int64),
                          np.array(c[3], dtype=np.int64), np.array(c[4]), np.array(c[5])))

    in_tree = False
    for ln in lines[1:]:
        if not ln or ln.startswith("#"):
            continue
        parts = ln.split()
        if parts[0] == "tree":
            if in_tree:
                flush()
            in_tree, rows, expected = True, [], int(parts[2])
        elif in_tree:
            rows.append(parts)
        else:
            meta[parts[0]] = parts[1]
    if in_tree:
        flush()
    try:
        model = GbdtModel(tuple(trees), float(meta["learning_rate"]), float(meta["base_score"]),
                          int(meta["n_features"]))
    except KeyError as exc:
        raise ModelError(f"{path}: missing {exc.args[0]}") from None
    return model, (float(meta["tau"]) if "tau" in meta else None)
