"""From-scratch random forest: seeded bootstrap sampling, recursive Gini
splits over random feature subsets, majority-vote prediction with a
conservative tie-goes-to-benign rule.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import EmptyDataset, SchemaMismatch
from ..events import Dataset, NetworkEventRecord
from .features import dataset_matrix, extract_features
from .kernels import best_split


@dataclass(frozen=True)
class TrainConfig:
    n_trees: int = 50
    max_depth: int = 8
    min_leaf: int = 2
    features_per_split: Optional[int] = None  # default ceil(sqrt(d))
    seed: int = 0

    def validate(self, n_features: int) -> int:
        if self.n_trees <= 0 or self.max_depth <= 0 or self.min_leaf <= 0:
            raise ValueError("all TrainConfig sizes must be positive")
        k = self.features_per_split or math.ceil(math.sqrt(n_features))
        if not (1 <= k <= n_features):
            raise ValueError(f"features_per_split {k} out of range for d={n_features}")
        return k

    def to_dict(self) -> dict:
        return {
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "min_leaf": self.min_leaf,
            "features_per_split": self.features_per_split,
            "seed": self.seed,
        }


@dataclass
class TreeNode:
    # Split node when feature_index >= 0, leaf otherwise.
    feature_index: int = -1
    threshold: float = 0.0
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None
    label: bool = False
    class_counts: tuple[int, int] = (0, 0)  # (benign, attack)

    @property
    def is_leaf(self) -> bool:
        return self.feature_index < 0


def _leaf(y: np.ndarray) -> TreeNode:
    attacks = int(y.sum())
    benign = int(y.shape[0] - attacks)
    # Majority label; exact tie inside a leaf also resolves to benign.
    return TreeNode(label=attacks > benign, class_counts=(benign, attacks))


def _build(X, y, depth, config: TrainConfig, k: int, rng: np.random.Generator) -> TreeNode:
    n = y.shape[0]
    if depth >= config.max_depth or n < 2 * config.min_leaf or y.min() == y.max():
        return _leaf(y)
    features = np.sort(rng.choice(X.shape[1], size=k, replace=False))
    f, threshold, impurity = best_split(X, y, features)
    if f < 0 or not np.isfinite(impurity):
        return _leaf(y)
    mask = X[:, f] <= threshold
    if mask.sum() < config.min_leaf or (~mask).sum() < config.min_leaf:
        return _leaf(y)
    node = TreeNode(feature_index=int(f), threshold=float(threshold))
    node.left = _build(X[mask], y[mask], depth + 1, config, k, rng)
    node.right = _build(X[~mask], y[~mask], depth + 1, config, k, rng)
    node.class_counts = (
        node.left.class_counts[0] + node.right.class_counts[0],
        node.left.class_counts[1] + node.right.class_counts[1],
    )
    return node


def record_identity(record: NetworkEventRecord) -> str:
    """Content hash used by the train/test leakage guard (event_id and label
    excluded on purpose: identity is the observable flow)."""
    parts = (
        record.src_ip, record.dst_ip, str(record.dst_port), record.protocol.value,
        str(record.bytes_sent), str(record.packets), str(record.duration_ms),
        *(f"{name}={value!r}" for name, value in record.extra_features),
    )
    return hashlib.sha256("|".join(parts).encode("utf-8")).hexdigest()


@dataclass
class ForestModel:
    trees: list[TreeNode]
    config: TrainConfig
    schema_fingerprint: str
    feature_names: tuple[str, ...]
    training_identities: frozenset[str] = frozenset()


def train_forest(data: Dataset, config: TrainConfig = TrainConfig()) -> ForestModel:
    """Deterministic given the seed: per-tree RNGs come from spawned seed
    sequences, so the first k trees are identical for any n_trees >= k."""
    if len(data.records) < 2:
        raise EmptyDataset("need at least 2 training records")
    X, y, fingerprint = dataset_matrix(data)
    k = config.validate(X.shape[1])
    # spawn(n) hands out child keys 0..n-1, so the first k trees are stable
    # under any increase of n_trees with the same master seed.
    tree_seeds = np.random.SeedSequence(config.seed).spawn(config.n_trees)
    trees = []
    for i in range(config.n_trees):
        rng = np.random.Generator(np.random.PCG64(tree_seeds[i]))
        indices = rng.integers(0, X.shape[0], size=X.shape[0])
        trees.append(_build(X[indices], y[indices], 0, config, k, rng))
    return ForestModel(
        trees=trees,
        config=config,
        schema_fingerprint=fingerprint,
        feature_names=tuple(data.records[0].feature_names),
        training_identities=frozenset(record_identity(r) for r in data.records),
    )


def predict_tree(node: TreeNode, values: np.ndarray) -> bool:
    while not node.is_leaf:
        node = node.left if values[node.feature_index] <= node.threshold else node.right
    return node.label


def predict(model: ForestModel, values: np.ndarray, fingerprint: str) -> tuple[bool, float]:
    """Majority vote over trees; even splits resolve to benign."""
    if fingerprint != model.schema_fingerprint:
        raise SchemaMismatch("feature schema does not match the trained model")
    votes = sum(1 for t in model.trees if predict_tree(t, values))
    score = votes / len(model.trees)
    return (votes * 2 > len(model.trees)), score


def predict_dataset(model: ForestModel, data: Dataset) -> list[tuple[bool, float]]:
    out = []
    for record in data.records:
        fv = extract_features(record)
        from ..events import schema_fingerprint as fp

        out.append(predict(model, fv.values, fp(fv.feature_names)))
    return out


def check_leakage(model: ForestModel, test_data: Dataset) -> list[int]:
    """Event ids of test records whose content hash appeared in training."""
    return [
        r.event_id for r in test_data.records
        if record_identity(r) in model.training_identities
    ]
