"""Second-order gradient boosting on logistic loss with exact greedy splits.

Per round: g_i = p_i - y_i, h_i = p_i (1 - p_i); the tree greedily takes
the split maximizing

    gain = 1/2 * (GL^2/(HL+lambda) + GR^2/(HR+lambda) - G^2/(H+lambda)) - gamma

over midpoints between consecutive distinct sorted feature values, with
ties broken by lowest feature index then lowest threshold. Leaves store
-eta * G/(H+lambda), i.e. the learning rate is already applied. Rows go
left when value < threshold; a feature missing from a scored vector reads
as 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .._kernels import find_best_split
from ..errors import DegenerateData, SchemaMismatch
from ..features import FeatureVector
from .logistic import sigmoid


@dataclass(frozen=True)
class TreeNode:
    """Internal node (feature/threshold/children) or leaf (value)."""

    feature: Optional[str] = None
    threshold: float = 0.0
    left: int = -1
    right: int = -1
    leaf: Optional[float] = None

    @property
    def is_leaf(self) -> bool:
        return self.leaf is not None


@dataclass
class TrainConfig:
    rounds: int = 200
    max_depth: int = 4
    learning_rate: float = 0.1
    l2_lambda: float = 1.0
    gamma_min_gain: float = 0.0
    min_child_hessian: float = 1e-3
    seed: int = 0  # training is deterministic; kept so runs are self-describing

    def __post_init__(self):
        if self.rounds < 0:
            raise ValueError("rounds must be >= 0")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError("learning_rate must be in (0, 1]")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")


@dataclass
class TreeEnsembleModel:
    feature_names: tuple[str, ...]
    base_score: float  # log-odds of training prevalence
    trees: tuple[tuple[TreeNode, ...], ...]
    learning_rate_applied: bool = True
    model_version: str = "ensemble-1"
    loss_history: Optional[list[float]] = field(default=None, compare=False)


def _feature_index(model: TreeEnsembleModel) -> dict[str, int]:
    return {name: i for i, name in enumerate(model.feature_names)}


def margin_matrix(model: TreeEnsembleModel, X: np.ndarray) -> np.ndarray:
    """Raw log-odds for rows whose columns follow model.feature_names order."""
    if X.shape[1] != len(model.feature_names):
        raise SchemaMismatch(
            f"matrix has {X.shape[1]} columns, model expects {len(model.feature_names)}"
        )
    idx = _feature_index(model)
    out = np.full(X.shape[0], model.base_score, dtype=np.float64)
    for tree in model.trees:
        out += _tree_values(tree, X, idx)
    return out


def _tree_values(tree: tuple[TreeNode, ...], X: np.ndarray, idx: dict[str, int]) -> np.ndarray:
    values = np.zeros(X.shape[0], dtype=np.float64)
    stack = [(0, np.arange(X.shape[0]))]
    while stack:
        node_id, rows = stack.pop()
        if rows.size == 0:
            continue
        node = tree[node_id]
        if node.is_leaf:
            values[rows] = node.leaf
            continue
        mask = X[rows, idx[node.feature]] < node.threshold
        stack.append((node.left, rows[mask]))
        stack.append((node.right, rows[~mask]))
    return values


def score_ensemble_matrix(model: TreeEnsembleModel, X: np.ndarray) -> np.ndarray:
    return sigmoid(margin_matrix(model, X))


def score_ensemble(model: TreeEnsembleModel, vector: FeatureVector) -> float:
    """Probability for one vector; features the model never saw are ignored,
    features it expects but the vector lacks read as 0."""
    values = vector.values
    margin = model.base_score
    for tree in model.trees:
        node = tree[0]
        while not node.is_leaf:
            if values.get(node.feature, 0.0) < node.threshold:
                node = tree[node.left]
            else:
                node = tree[node.right]
        margin += node.leaf
    return float(sigmoid(margin))


def _grow_tree(
    X: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    feature_names: Sequence[str],
    config: TrainConfig,
) -> tuple[TreeNode, ...]:
    """Greedy depth-first tree; nodes are emitted parent-before-children."""
    nodes: list[TreeNode] = []

    def leaf_value(rows: np.ndarray) -> float:
        g_sum = float(np.sum(g[rows]))
        h_sum = float(np.sum(h[rows]))
        return -config.learning_rate * g_sum / (h_sum + config.l2_lambda)

    def build(rows: np.ndarray, depth: int) -> int:
        node_id = len(nodes)
        nodes.append(TreeNode())  # placeholder
        if depth < config.max_depth:
            sub = np.ascontiguousarray(X[rows])
            feat, thr, _gain = find_best_split(
                sub,
                np.ascontiguousarray(g[rows]),
                np.ascontiguousarray(h[rows]),
                config.l2_lambda,
                config.gamma_min_gain,
                config.min_child_hessian,
            )
            if feat >= 0:
                mask = X[rows, feat] < thr
                left = build(rows[mask], depth + 1)
                right = build(rows[~mask], depth + 1)
                nodes[node_id] = TreeNode(
                    feature=feature_names[feat], threshold=thr, left=left, right=right
                )
                return node_id
        nodes[node_id] = TreeNode(leaf=leaf_value(rows))
        return node_id

    build(np.arange(X.shape[0]), 0)
    return tuple(nodes)


def train_boosted_trees(
    X: np.ndarray,
    y: np.ndarray,
    feature_names: Sequence[str],
    config: TrainConfig = TrainConfig(),
) -> TreeEnsembleModel:
    """Newton boosting; base score is the log-odds of training prevalence."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.shape[0] == 0:
        raise DegenerateData("no training rows")
    prevalence = float(y.mean())
    if prevalence in (0.0, 1.0):
        raise DegenerateData("training labels contain a single class")
    base = float(np.log(prevalence / (1.0 - prevalence)))
    margins = np.full(X.shape[0], base, dtype=np.float64)
    idx = {name: i for i, name in enumerate(feature_names)}
    trees: list[tuple[TreeNode, ...]] = []
    loss_history: list[float] = [_mean_logloss(y, margins)]
    for _ in range(config.rounds):
        p = sigmoid(margins)
        g = p - y
        h = p * (1.0 - p)
        tree = _grow_tree(X, g, h, feature_names, config)
        trees.append(tree)
        margins += _tree_values(tree, X, idx)
        loss_history.append(_mean_logloss(y, margins))
    model = TreeEnsembleModel(tuple(feature_names), base, tuple(trees))
    model.loss_history = loss_history
    return model


def _mean_logloss(y: np.ndarray, margins: np.ndarray) -> float:
    return float(np.mean(np.logaddexp(0.0, margins) - y * margins))


def train_boosted_trees_rows(
    rows: Iterable[tuple[FeatureVector, int]], config: TrainConfig = TrainConfig()
) -> TreeEnsembleModel:
    rows = list(rows)
    if not rows:
        raise DegenerateData("no training rows")
    names = rows[0][0].names
    X = np.array([vec.as_array(names) for vec, _ in rows], dtype=np.float64)
    y = np.array([int(label) for _, label in rows], dtype=np.float64)
    return train_boosted_trees(X, y, names, config)
