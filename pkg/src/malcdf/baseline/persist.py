"""Versioned binary model file (layout documented in docs/model-format.md).

Layout: magic ``LRF1`` | u32 header length | JSON header | per tree:
u32 node count followed by packed node records.  Nodes are stored in
preorder with child indices, so loading rebuilds the exact structure.
"""

from __future__ import annotations

import json
import struct

from ..errors import BadValue
from .forest import ForestModel, TrainConfig, TreeNode

MAGIC = b"LRF1"
_NODE = struct.Struct(">i d i i B i i")  # feature, threshold, left, right, label, benign, attack


def _flatten(root: TreeNode) -> list[tuple]:
    nodes: list[tuple] = []

    def walk(node: TreeNode) -> int:
        index = len(nodes)
        nodes.append(None)  # reserve preorder slot
        if node.is_leaf:
            nodes[index] = (-1, 0.0, -1, -1, int(node.label), *node.class_counts)
        else:
            left = walk(node.left)
            right = walk(node.right)
            nodes[index] = (
                node.feature_index, node.threshold, left, right, 0, *node.class_counts
            )
        return index

    walk(root)
    return nodes


def _rebuild(nodes: list[tuple], index: int = 0) -> TreeNode:
    feature, threshold, left, right, label, benign, attack = nodes[index]
    if feature < 0:
        return TreeNode(label=bool(label), class_counts=(benign, attack))
    return TreeNode(
        feature_index=feature,
        threshold=threshold,
        left=_rebuild(nodes, left),
        right=_rebuild(nodes, right),
        class_counts=(benign, attack),
    )


def save_model(model: ForestModel, path: str) -> None:
    header = json.dumps(
        {
            "config": model.config.to_dict(),
            "schema_fingerprint": model.schema_fingerprint,
            "feature_names": list(model.feature_names),
            "n_trees": len(model.trees),
            "training_identities": sorted(model.training_identities),
        },
        sort_keys=True,
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack(">I", len(header)))
        fh.write(header)
        for tree in model.trees:
            nodes = _flatten(tree)
            fh.write(struct.pack(">I", len(nodes)))
            for node in nodes:
                fh.write(_NODE.pack(*node))


def load_model(path: str) -> ForestModel:
    with open(path, "rb") as fh:
        if fh.read(4) != MAGIC:
            raise BadValue("not a model file (bad magic)")
        (header_len,) = struct.unpack(">I", fh.read(4))
        header = json.loads(fh.read(header_len).decode("utf-8"))
        trees = []
        for _ in range(header["n_trees"]):
            (count,) = struct.unpack(">I", fh.read(4))
            nodes = [_NODE.unpack(fh.read(_NODE.size)) for _ in range(count)]
            trees.append(_rebuild(nodes))
    cfg = header["config"]
    return ForestModel(
        trees=trees,
        config=TrainConfig(**cfg),
        schema_fingerprint=header["schema_fingerprint"],
        feature_names=tuple(header["feature_names"]),
        training_identities=frozenset(header["training_identities"]),
    )
