"""Versioned JSON model format shared by both model families.

Logistic:
    {"version": 1, "kind": "logistic", "features": [...], "intercept": x,
     "coefficients": [...], "percentiles": [...] | null}
Ensemble:
    {"version": 1, "kind": "ensemble", "features": [...], "base_score": x,
     "trees": [[{"feature": name, "threshold": t, "left": i, "right": j}
                | {"leaf": v}, ...], ...]}

Children are indices into the tree's node list; node 0 is the root and
children always come after their parent. Floats round-trip exactly via
repr. Unknown top-level keys are tolerated.
"""

from __future__ import annotations

import io
import json
from pathlib import Path
from typing import Union

import numpy as np

from ..errors import CorruptModel, UnknownModelVersion
from .boosting import TreeEnsembleModel, TreeNode
from .logistic import LogisticModel

FORMAT_VERSION = 1

RiskModel = Union[LogisticModel, TreeEnsembleModel]
PathOrFile = Union[str, Path, io.TextIOBase]


def model_to_dict(model: RiskModel) -> dict:
    if isinstance(model, LogisticModel):
        return {
            "version": FORMAT_VERSION,
            "kind": "logistic",
            "model_version": model.model_version,
            "features": list(model.feature_names),
            "intercept": model.intercept,
            "coefficients": [float(c) for c in model.coefficients],
            "percentiles": None
            if model.percentiles is None
            else [float(s) for s in model.percentiles],
        }
    if isinstance(model, TreeEnsembleModel):
        trees = []
        for tree in model.trees:
            nodes = []
            for node in tree:
                if node.is_leaf:
                    nodes.append({"leaf": float(node.leaf)})
                else:
                    nodes.append(
                        {
                            "feature": node.feature,
                            "threshold": float(node.threshold),
                            "left": node.left,
                            "right": node.right,
                        }
                    )
            trees.append(nodes)
        return {
            "version": FORMAT_VERSION,
            "kind": "ensemble",
            "model_version": model.model_version,
            "features": list(model.feature_names),
            "base_score": float(model.base_score),
            "learning_rate_applied": model.learning_rate_applied,
            "trees": trees,
        }
    raise TypeError(f"not a risk model: {type(model)!r}")


def save_model(model: RiskModel, sink: PathOrFile) -> None:
    text = json.dumps(model_to_dict(model), sort_keys=True, separators=(",", ":"))
    if isinstance(sink, (str, Path)):
        Path(sink).write_text(text + "\n", encoding="utf-8")
    else:
        sink.write(text + "\n")


def model_from_dict(doc: dict) -> RiskModel:
    if not isinstance(doc, dict):
        raise CorruptModel("model document is not a JSON object")
    version = doc.get("version")
    if version != FORMAT_VERSION:
        raise UnknownModelVersion(version)
    kind = doc.get("kind")
    try:
        if kind == "logistic":
            percentiles = doc.get("percentiles")
            return LogisticModel(
                feature_names=tuple(doc["features"]),
                coefficients=np.array(doc["coefficients"], dtype=np.float64),
                intercept=float(doc["intercept"]),
                percentiles=None if percentiles is None else np.array(percentiles),
                model_version=str(doc.get("model_version", "logistic-1")),
            )
        if kind == "ensemble":
            trees = []
            for raw_tree in doc["trees"]:
                nodes = []
                for i, raw in enumerate(raw_tree):
                    if "leaf" in raw:
                        nodes.append(TreeNode(leaf=float(raw["leaf"])))
                    else:
                        left, right = int(raw["left"]), int(raw["right"])
                        if not (i < left < len(raw_tree) and i < right < len(raw_tree)):
                            raise CorruptModel(
                                f"node {i} has out-of-order child indices ({left}, {right})"
                            )
                        nodes.append(
                            TreeNode(
                                feature=str(raw["feature"]),
                                threshold=float(raw["threshold"]),
                                left=left,
                                right=right,
                            )
                        )
                trees.append(tuple(nodes))
            model = TreeEnsembleModel(
                feature_names=tuple(doc["features"]),
                base_score=float(doc["base_score"]),
                trees=tuple(trees),
                learning_rate_applied=bool(doc.get("learning_rate_applied", True)),
                model_version=str(doc.get("model_version", "ensemble-1")),
            )
            for tree in model.trees:
                for node in tree:
                    if not node.is_leaf and node.feature not in model.feature_names:
                        raise CorruptModel(f"unknown feature {node.feature!r} in tree")
            return model
    except CorruptModel:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptModel(f"bad model document: {exc}") from exc
    raise CorruptModel(f"unknown model kind {kind!r}")


def load_model(source: PathOrFile) -> RiskModel:
    try:
        if isinstance(source, (str, Path)):
            text = Path(source).read_text(encoding="utf-8")
        else:
            text = source.read()
        doc = json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise CorruptModel(f"unreadable model file: {exc}") from exc
    return model_from_dict(doc)
