"""Bagged CART forests with Gini splits and soft voting."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from threadcred import rng
from threadcred.learn import kernels

MODEL_FORMAT = "threadcred-forest"
MODEL_VERSION = 1


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    max_depth: int | None = None
    min_leaf: int = 1
    features_per_split: int | None = None  # None -> ceil(sqrt(k))
    seed: int = 0

    def mtry(self, k: int) -> int:
        if self.features_per_split is not None:
            return max(1, min(k, self.features_per_split))
        return max(1, math.ceil(math.sqrt(k)))


@dataclass
class ForestModel:
    """A trained forest stored as flat node arrays.

    Tree ``t`` owns nodes ``offsets[t]:offsets[t+1]``; child indices are
    local to the tree and ``feature == -1`` marks a leaf whose ``value`` is
    the positive-class fraction of its bootstrap samples.
    """

    n_features: int
    config: ForestConfig
    offsets: np.ndarray
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    feature_ids: list[str] = field(default_factory=list)

    @property
    def n_trees(self) -> int:
        return len(self.offsets) - 1

    def tree(self, t: int) -> dict[str, np.ndarray]:
        lo, hi = int(self.offsets[t]), int(self.offsets[t + 1])
        return {
            "feature": self.feature[lo:hi],
            "threshold": self.threshold[lo:hi],
            "left": self.left[lo:hi],
            "right": self.right[lo:hi],
            "value": self.value[lo:hi],
        }

    def predict_proba(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        if X.shape[1] != self.n_features:
            raise ValueError(
                f"row width {X.shape[1]} does not match model width {self.n_features}"
            )
        return kernels.predict_forest(
            X, self.offsets, self.feature, self.threshold, self.left, self.right, self.value
        )

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X) > 0.5).astype(np.int8)

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "n_features": self.n_features,
            "feature_ids": list(self.feature_ids),
            "config": asdict(self.config),
            "trees": [
                {name: arr.tolist() for name, arr in self.tree(t).items()}
                for t in range(self.n_trees)
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ForestModel":
        if doc.get("format") != MODEL_FORMAT:
            raise ValueError("not a forest model dump")
        if doc.get("version") != MODEL_VERSION:
            raise ValueError(f"unsupported forest model version {doc.get('version')}")
        trees = doc["trees"]
        sizes = [len(t["feature"]) for t in trees]
        offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)

        def cat(name, dtype):
            return np.concatenate([np.asarray(t[name], dtype=dtype) for t in trees])

        return cls(
            n_features=int(doc["n_features"]),
            config=ForestConfig(**doc["config"]),
            offsets=offsets,
            feature=cat("feature", np.int32),
            threshold=cat("threshold", np.float64),
            left=cat("left", np.int32),
            right=cat("right", np.int32),
            value=cat("value", np.float64),
            feature_ids=list(doc.get("feature_ids", [])),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "ForestModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def train_forest(X, y, config: ForestConfig = ForestConfig(), *, key: int | None = None,
                 feature_ids=None) -> ForestModel:
    """Fit a forest on rows ``X`` with binary labels ``y``.

    ``key`` overrides the stream key derived from ``config.seed``; callers
    running many forests (cross-validation, repeats) pass task-derived keys.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be 2-D with one label per row")
    n, k = X.shape
    if k < 1:
        raise ValueError("at least one feature is required")
    if not np.all(np.isfinite(X)):
        raise ValueError("feature values must be finite")
    labels = set(np.unique(y).tolist())
    if not labels <= {0, 1}:
        raise ValueError("labels must be binary 0/1")
    if len(labels) < 2:
        raise ValueError("training data contains a single class")
    if key is None:
        key = rng.derive(config.seed, "forest")
    max_depth = -1 if config.max_depth is None else int(config.max_depth)
    arrays = kernels.fit_forest(
        X, y.astype(np.uint8), int(config.n_trees), config.mtry(k), max_depth,
        int(config.min_leaf), int(key),
    )
    return ForestModel(k, config, *arrays, feature_ids=list(feature_ids or []))


def predict_proba(model: ForestModel, row) -> float | np.ndarray:
    """Forest probability for one row (float) or a matrix of rows (array)."""
    arr = np.asarray(row, dtype=np.float64)
    out = model.predict_proba(arr)
    return float(out[0]) if arr.ndim == 1 else out
