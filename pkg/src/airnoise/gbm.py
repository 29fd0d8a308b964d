"""Second-order gradient-boosted regression trees for hourly noise levels.

Squared-error loss only: per-row gradient g = prediction - target, hessian
h = 1. Trees are grown by exact greedy enumeration of every midpoint between
consecutive distinct feature values, maximizing

    gain = 1/2 * [ G_L^2/(H_L+lambda) + G_R^2/(H_R+lambda)
                   - (G_L+G_R)^2/(H_L+H_R+lambda) ] - gamma

with leaf weight -G/(H+lambda). Equal-gain ties resolve to the lowest
feature index, then the lowest split value, so a training run is bit-for-bit
reproducible anywhere. Each internal node records the fraction of its
training rows routed left/right; the attribution module uses these covers as
the branch weights for unconditioned features.

The fitted model is base_score + learning_rate * sum(tree outputs); training
runs until rounds_max or until validation RMSE has not improved for
``early_stopping_patience`` rounds, and the returned ensemble is the prefix
of trees up to the best validation round.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    EmptyInput,
    InvalidConfig,
    MissingFeature,
    NonFiniteFeature,
    NonFiniteTarget,
    TooFewRows,
)
from .fusion import FeatureTable
from .rng import substream

ROUNDS_MIN = 10
ROUNDS_MAX = 1000


@dataclass
class TreeNode:
    """Internal node (feature_index/split_value/children/covers) or leaf (weight)."""

    feature_index: int = -1
    split_value: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    cover_left: float = 0.0
    cover_right: float = 0.0
    weight: float = 0.0

    @property
    def is_leaf(self) -> bool:
        return self.left is None


@dataclass
class Ensemble:
    base_score: float
    learning_rate: float
    trees: list[TreeNode]
    feature_names: list[str]


@dataclass
class TrainConfig:
    learning_rate: float = 0.05
    rounds_max: int = 300
    max_depth: int = 6
    lambda_: float = 1.0
    gamma: float = 0.0
    min_child_weight: float = 1.0
    early_stopping_patience: int = 25
    split_fraction: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if not ROUNDS_MIN <= self.rounds_max <= ROUNDS_MAX:
            raise InvalidConfig(f"rounds_max must lie in [{ROUNDS_MIN}, {ROUNDS_MAX}]")
        if self.lambda_ < 0 or self.gamma < 0:
            raise InvalidConfig("lambda and gamma must be non-negative")
        if self.max_depth < 1:
            raise InvalidConfig("max_depth must be at least 1")


# ---------------------------------------------------------------------------
# data split

def split_data(table: FeatureTable, fraction: float = 0.9, seed: int = 0) -> tuple[FeatureTable, FeatureTable]:
    """Deterministic uniform-random row partition of a feature table.

    The same seed always produces the same partition; both parts must end up
    non-empty, so fractions of 0 or 1 are rejected.
    """
    n = len(table.keys)
    if n < 10:
        raise TooFewRows(f"need at least 10 rows to split, got {n}")
    n_train = int(round(fraction * n))
    if not 1 <= n_train <= n - 1:
        raise InvalidConfig(f"fraction {fraction} leaves an empty part for {n} rows")
    order = substream(seed, "split").permutation(n)
    train_idx = np.sort(order[:n_train])
    test_idx = np.sort(order[n_train:])

    def subset(idx: np.ndarray) -> FeatureTable:
        return FeatureTable(
            keys=[table.keys[i] for i in idx],
            feature_names=list(table.feature_names),
            matrix=table.matrix[idx],
            takeoff_laeq=table.takeoff_laeq[idx],
            landing_laeq=table.landing_laeq[idx],
        )

    return subset(train_idx), subset(test_idx)


# ---------------------------------------------------------------------------
# tree growing

def _grow(X: np.ndarray, g: np.ndarray, h: np.ndarray, rows: np.ndarray,
          depth: int, cfg: TrainConfig) -> TreeNode:
    g_node = g[rows]
    h_node = h[rows]
    G = float(g_node.sum())
    H = float(h_node.sum())
    n = rows.size
    if depth >= cfg.max_depth or n < 2:
        return TreeNode(weight=-(G / (H + cfg.lambda_)) + 0.0)

    # evaluate every candidate split of every feature in one shot:
    # column-sorted cumulative G/H give left-side statistics at each boundary
    X_node = X[rows]
    order = np.argsort(X_node, axis=0, kind="stable")
    xs = np.take_along_axis(X_node, order, axis=0)
    gl = np.cumsum(g_node[order], axis=0)[:-1]
    hl = np.cumsum(h_node[order], axis=0)[:-1]
    gr = G - gl
    hr = H - hl
    lam = cfg.lambda_
    with np.errstate(invalid="ignore", divide="ignore"):
        gains = 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - G * G / (H + lam)) - cfg.gamma
    valid = (xs[:-1] < xs[1:]) & (hl >= cfg.min_child_weight) & (hr >= cfg.min_child_weight)
    gains[~valid] = -math.inf

    # argmax over the feature-major layout resolves equal gains to the lowest
    # feature index, then the lowest split value
    flat = int(np.argmax(gains.T))
    j, pos = divmod(flat, n - 1)
    best_gain = float(gains[pos, j])
    if not best_gain > 0.0:
        return TreeNode(weight=-(G / (H + cfg.lambda_)) + 0.0)

    split_value = (float(xs[pos, j]) + float(xs[pos + 1, j])) / 2.0
    left_rows = rows[order[:pos + 1, j]]
    right_rows = rows[order[pos + 1:, j]]
    hl_sum = float(hl[pos, j])
    return TreeNode(
        feature_index=j,
        split_value=split_value,
        cover_left=hl_sum / H,
        cover_right=(H - hl_sum) / H,
        left=_grow(X, g, h, left_rows, depth + 1, cfg),
        right=_grow(X, g, h, right_rows, depth + 1, cfg),
    )


def _tree_predict(node: TreeNode, X: np.ndarray, rows: np.ndarray, out: np.ndarray) -> None:
    if node.is_leaf:
        out[rows] = node.weight
        return
    go_left = X[rows, node.feature_index] < node.split_value
    _tree_predict(node.left, X, rows[go_left], out)
    _tree_predict(node.right, X, rows[~go_left], out)


def tree_predict(node: TreeNode, X: np.ndarray) -> np.ndarray:
    out = np.empty(X.shape[0])
    _tree_predict(node, X, np.arange(X.shape[0]), out)
    return out


# ---------------------------------------------------------------------------
# training

def _check_matrix(X: np.ndarray) -> None:
    if X.ndim != 2 or X.shape[1] < 1:
        raise InvalidConfig("feature matrix must be 2-D with at least one column")
    if not np.isfinite(X).all():
        raise NonFiniteFeature("feature matrix contains NaN or infinity")


def train(
    X_train: np.ndarray,
    y_train: np.ndarray,
    X_valid: np.ndarray,
    y_valid: np.ndarray,
    config: TrainConfig,
    feature_names: Sequence[str],
) -> tuple[Ensemble, list[dict]]:
    """Boost trees on (X_train, y_train), early-stopping on (X_valid, y_valid).

    Returns the selected ensemble (prefix of trees up to the best validation
    round) and the per-round history of train/valid MAE and RMSE for every
    round actually run.
    """
    X_train = np.asarray(X_train, dtype=np.float64)
    X_valid = np.asarray(X_valid, dtype=np.float64)
    y_train = np.asarray(y_train, dtype=np.float64)
    y_valid = np.asarray(y_valid, dtype=np.float64)
    _check_matrix(X_train)
    _check_matrix(X_valid)
    if y_train.size == 0 or y_valid.size == 0:
        raise EmptyInput("training and validation targets must be non-empty")
    if not (np.isfinite(y_train).all() and np.isfinite(y_valid).all()):
        raise NonFiniteTarget("targets contain NaN or infinity")

    base = float(np.mean(y_train))
    pred_train = np.full(y_train.size, base)
    pred_valid = np.full(y_valid.size, base)
    hess = np.ones(y_train.size)
    all_rows = np.arange(y_train.size)

    trees: list[TreeNode] = []
    history: list[dict] = []
    best_rmse = _rmse(pred_valid, y_valid)
    best_round = 0
    stale = 0
    for rnd in range(1, config.rounds_max + 1):
        grad = pred_train - y_train
        tree = _grow(X_train, grad, hess, all_rows, 0, config)
        trees.append(tree)
        pred_train += config.learning_rate * tree_predict(tree, X_train)
        pred_valid += config.learning_rate * tree_predict(tree, X_valid)
        valid_rmse = _rmse(pred_valid, y_valid)
        history.append({
            "round": rnd,
            "train_mae": _mae(pred_train, y_train),
            "train_rmse": _rmse(pred_train, y_train),
            "valid_mae": _mae(pred_valid, y_valid),
            "valid_rmse": valid_rmse,
        })
        if valid_rmse < best_rmse:
            best_rmse = valid_rmse
            best_round = rnd
            stale = 0
        else:
            stale += 1
            if stale >= config.early_stopping_patience:
                break

    ensemble = Ensemble(
        base_score=base,
        learning_rate=config.learning_rate,
        trees=trees[:best_round],
        feature_names=list(feature_names),
    )
    return ensemble, history


def _mae(pred: np.ndarray, y: np.ndarray) -> float:
    return float(np.mean(np.abs(pred - y)))


def _rmse(pred: np.ndarray, y: np.ndarray) -> float:
    return float(math.sqrt(np.mean((pred - y) ** 2)))


# ---------------------------------------------------------------------------
# prediction and evaluation

def predict(ensemble: Ensemble, row: Mapping[str, float]) -> float:
    """Prediction for one row given as a feature-name mapping.

    Every feature the ensemble was trained with must be present and finite;
    there is no default-direction handling for missing values.
    """
    values = np.empty(len(ensemble.feature_names))
    for i, name in enumerate(ensemble.feature_names):
        if name not in row:
            raise MissingFeature(name)
        v = float(row[name])
        if not math.isfinite(v):
            raise NonFiniteFeature(f"feature {name!r} is not finite")
        values[i] = v
    return predict_batch(ensemble, values.reshape(1, -1))[0]


def predict_batch(ensemble: Ensemble, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    _check_matrix(X)
    if X.shape[1] != len(ensemble.feature_names):
        raise MissingFeature(f"expected {len(ensemble.feature_names)} features, got {X.shape[1]}")
    out = np.full(X.shape[0], ensemble.base_score)
    for tree in ensemble.trees:
        out += ensemble.learning_rate * tree_predict(tree, X)
    return out


def evaluate(ensemble: Ensemble, X: np.ndarray, y: np.ndarray) -> dict[str, float]:
    y = np.asarray(y, dtype=np.float64)
    if y.size == 0:
        raise EmptyInput("no rows to evaluate")
    pred = predict_batch(ensemble, X)
    return {"mae": _mae(pred, y), "rmse": _rmse(pred, y)}


# ---------------------------------------------------------------------------
# serialization: self-describing JSON, stable byte-for-byte for a given model

def _node_to_list(node: TreeNode, out: list[dict]) -> None:
    if node.is_leaf:
        out.append({"leaf": node.weight})
        return
    out.append({
        "feature": node.feature_index,
        "split": node.split_value,
        "cover_left": node.cover_left,
        "cover_right": node.cover_right,
    })
    _node_to_list(node.left, out)
    _node_to_list(node.right, out)


def _node_from_list(nodes: list[dict], pos: int) -> tuple[TreeNode, int]:
    spec = nodes[pos]
    if "leaf" in spec:
        return TreeNode(weight=spec["leaf"]), pos + 1
    left, pos = _node_from_list(nodes, pos + 1)
    right, pos = _node_from_list(nodes, pos)
    return TreeNode(
        feature_index=spec["feature"],
        split_value=spec["split"],
        cover_left=spec["cover_left"],
        cover_right=spec["cover_right"],
        left=left,
        right=right,
    ), pos


def to_json(ensemble: Ensemble, config: TrainConfig | None = None, history: list[dict] | None = None) -> str:
    doc = {
        "format": "airnoise-gbm",
        "version": 1,
        "base_score": ensemble.base_score,
        "learning_rate": ensemble.learning_rate,
        "feature_names": ensemble.feature_names,
        "trees": [],
        "config": None if config is None else {
            "learning_rate": config.learning_rate,
            "rounds_max": config.rounds_max,
            "max_depth": config.max_depth,
            "lambda": config.lambda_,
            "gamma": config.gamma,
            "min_child_weight": config.min_child_weight,
            "early_stopping_patience": config.early_stopping_patience,
            "split_fraction": config.split_fraction,
            "seed": config.seed,
        },
        "history": history or [],
    }
    for tree in ensemble.trees:
        nodes: list[dict] = []
        _node_to_list(tree, nodes)
        doc["trees"].append(nodes)
    return json.dumps(doc, sort_keys=True, indent=1)


def from_json(text: str) -> tuple[Ensemble, dict | None, list[dict]]:
    doc = json.loads(text)
    if doc.get("format") != "airnoise-gbm":
        raise InvalidConfig("not an airnoise model document")
    trees = []
    for nodes in doc["trees"]:
        tree, pos = _node_from_list(nodes, 0)
        if pos != len(nodes):
            raise InvalidConfig("trailing nodes in serialized tree")
        trees.append(tree)
    ensemble = Ensemble(
        base_score=doc["base_score"],
        learning_rate=doc["learning_rate"],
        trees=trees,
        feature_names=list(doc["feature_names"]),
    )
    return ensemble, doc.get("config"), doc.get("history", [])
