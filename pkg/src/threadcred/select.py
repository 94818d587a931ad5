"""Recursive feature elimination and cross-dataset transfer evaluation."""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from threadcred import rng
from threadcred.features import REGISTRY, FeatureMatrix
from threadcred.learn import (
    ForestConfig,
    RocCurve,
    accuracy,
    chi2_test,
    confusion_table,
    roc_auc,
    roc_curve,
    stratified_kfold,
    train_forest,
)

log = logging.getLogger(__name__)

POSITIVE = "accurate"
NEGATIVE = "inaccurate"


@dataclass
class Dataset:
    """Labelled rows, canonically ordered by thread id.

    ``y`` is 1 for accurate, 0 for inaccurate.
    """

    name: str
    thread_ids: list[str]
    X: np.ndarray
    y: np.ndarray
    feature_ids: list[str] = field(default_factory=lambda: list(REGISTRY))

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int8)
        if self.X.shape != (len(self.thread_ids), len(self.feature_ids)):
            raise ValueError("dataset shape does not match ids")
        if len(set(self.thread_ids)) != len(self.thread_ids):
            raise ValueError("duplicate thread ids")
        order = sorted(range(len(self.thread_ids)), key=self.thread_ids.__getitem__)
        self.thread_ids = [self.thread_ids[i] for i in order]
        self.X = np.ascontiguousarray(self.X[order])
        self.y = self.y[order]

    @classmethod
    def from_matrix(cls, matrix: FeatureMatrix, name: str = "dataset") -> "Dataset":
        keep = [i for i, lab in enumerate(matrix.labels) if lab in (POSITIVE, NEGATIVE)]
        return cls(
            name,
            [matrix.thread_ids[i] for i in keep],
            matrix.values[keep],
            np.array([1 if matrix.labels[i] == POSITIVE else 0 for i in keep], dtype=np.int8),
        )

    def __len__(self) -> int:
        return len(self.thread_ids)

    def columns(self, feature_ids: Sequence[str]) -> np.ndarray:
        idx = [self.feature_ids.index(f) for f in feature_ids]
        return np.ascontiguousarray(self.X[:, idx])

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["thread_id", *self.feature_ids, "label"])
            for tid, row, lab in zip(self.thread_ids, self.X, self.y):
                w.writerow([tid, *(repr(float(x)) for x in row), POSITIVE if lab else NEGATIVE])

    def flipped(self) -> "Dataset":
        return Dataset(self.name + "-flipped", list(self.thread_ids), self.X, 1 - self.y,
                       list(self.feature_ids))


def read_dataset(path, name: str | None = None) -> Dataset:
    """Load a ``thread_id,<features...>,label`` CSV; unlabeled rows are dropped.

    Any feature columns are accepted, so both registry matrices and
    synthetic tables load the same way.
    """
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or len(rows[0]) < 3 or rows[0][0] != "thread_id" or rows[0][-1] != "label":
        raise ValueError(f"{path}: expected a thread_id,...,label header")
    feature_ids = rows[0][1:-1]
    if len(set(feature_ids)) != len(feature_ids):
        raise ValueError(f"{path}: duplicate feature columns")
    ids, vals, ys = [], [], []
    for line_no, row in enumerate(rows[1:], start=2):
        if len(row) != len(rows[0]):
            raise ValueError(f"{path}: line {line_no}: expected {len(rows[0])} fields")
        if row[-1] not in (POSITIVE, NEGATIVE):
            continue
        ids.append(row[0])
        vals.append([float(x) for x in row[1:-1]])
        ys.append(1 if row[-1] == POSITIVE else 0)
    X = np.asarray(vals, dtype=np.float64).reshape(len(ids), len(feature_ids))
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{path}: non-finite feature value")
    return Dataset(name or path.stem, ids, X, np.asarray(ys, dtype=np.int8), feature_ids)


@dataclass(frozen=True)
class EvalConfig:
    repeats: int = 30
    folds: int = 10
    trees: int = 100
    seed: int = 0
    jobs: int = 1


@dataclass
class FeatureSetScore:
    feature_ids: list[str]
    aucs: list[float]

    @property
    def mean(self) -> float:
        return float(np.mean(self.aucs))


def _forest_config(config) -> ForestConfig:
    return ForestConfig(n_trees=config.trees, seed=config.seed)


def cross_val_scores(dataset: Dataset, feature_ids: Sequence[str], config: EvalConfig,
                     repeat: int) -> np.ndarray:
    """Pooled out-of-fold forest probabilities for one repeat."""
    X = dataset.columns(feature_ids)
    y = dataset.y
    scores = np.empty(len(dataset), dtype=np.float64)
    folds = stratified_kfold(y, config.folds, key=rng.derive(config.seed, "cv", repeat))
    fc = _forest_config(config)
    for i, test in enumerate(folds):
        train = np.ones(len(dataset), dtype=bool)
        train[test] = False
        model = train_forest(X[train], y[train], fc,
                             key=rng.derive(config.seed, "cv", repeat, "fold", i))
        scores[test] = model.predict_proba(X[test])
    return scores


def evaluate_feature_set(dataset: Dataset, feature_ids: Sequence[str],
                         config: EvalConfig = EvalConfig()) -> FeatureSetScore:
    """Repeated stratified k-fold ROC-AUC of a forest on ``feature_ids``.

    Streams depend on (seed, repeat, fold) only, so different feature
    subsets are compared on identical folds and bootstrap draws.
    """
    if not feature_ids:
        raise ValueError("feature set is empty")
    aucs = [roc_auc(cross_val_scores(dataset, feature_ids, config, r), dataset.y)
            for r in range(config.repeats)]
    return FeatureSetScore(list(feature_ids), aucs)


@dataclass
class Iteration:
    active: list[str]
    held_out_auc: dict[str, float]
    removed: str
    best_auc: float


@dataclass
class EliminationTrace:
    iterations: list[Iteration]
    config: EvalConfig
    dataset: str = ""

    @property
    def chosen_subset(self) -> list[str]:
        """Active set after the removal scoring the global best AUC.

        Ties go to the later iteration, i.e. the smaller subset.
        """
        if not self.iterations:
            return []
        best = max(range(len(self.iterations)),
                   key=lambda i: (self.iterations[i].best_auc, i))
        it = self.iterations[best]
        return [f for f in it.active if f != it.removed]

    def to_json(self) -> dict:
        cfg = asdict(self.config)
        cfg.pop("jobs")
        return {
            "dataset": self.dataset,
            "config": cfg,
            "iterations": [asdict(it) for it in self.iterations],
            "chosen_subset": self.chosen_subset,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "EliminationTrace":
        return cls([Iteration(**it) for it in doc["iterations"]], EvalConfig(**doc["config"]),
                   doc.get("dataset", ""))

    def curve_csv(self) -> str:
        lines = ["iteration,n_features,best_auc,removed"]
        for i, it in enumerate(self.iterations, start=1):
            lines.append(f"{i},{len(it.active) - 1},{it.best_auc!r},{it.removed}")
        return "\n".join(lines) + "\n"


def _held_out(args):
    dataset, active, feature, config = args
    subset = [f for f in active if f != feature]
    return evaluate_feature_set(dataset, subset, config).mean


def rfe(dataset: Dataset, config: EvalConfig = EvalConfig(), features: Sequence[str] | None = None,
        max_iterations: int | None = None) -> EliminationTrace:
    """Leave-one-out recursive feature elimination.

    Each iteration scores every active feature's exclusion and removes the
    one whose exclusion scores highest (ties to the lowest column index),
    continuing until one feature remains.
    """
    active = list(features if features is not None else dataset.feature_ids)
    if len(active) < 2:
        raise ValueError("recursive elimination needs at least two features")
    order = {f: dataset.feature_ids.index(f) for f in active}
    iterations: list[Iteration] = []
    pool = ProcessPoolExecutor(max_workers=config.jobs) if config.jobs > 1 else None
    try:
        while len(active) > 1:
            if max_iterations is not None and len(iterations) >= max_iterations:
                break
            tasks = [(dataset, active, f, config) for f in active]
            means = list(pool.map(_held_out, tasks)) if pool else [_held_out(t) for t in tasks]
            scored = dict(zip(active, means))
            removed = max(active, key=lambda f: (scored[f], -order[f]))
            iterations.append(Iteration(list(active), scored, removed, scored[removed]))
            log.info("rfe %s: %d features, removed %s (auc %.4f)", dataset.name,
                     len(active) - 1, removed, scored[removed])
            active = [f for f in active if f != removed]
    finally:
        if pool:
            pool.shutdown()
    return EliminationTrace(iterations, config, dataset.name)


@dataclass(frozen=True)
class TransferConfig:
    repeats: int = 20
    trees: int = 100
    seed: int = 0


@dataclass
class TransferResult:
    source: str
    target: str
    feature_ids: list[str]
    aucs: list[float]
    accuracies: list[float]
    roc: RocCurve
    chi2: float | None
    p_value: float | None
    table: list[list[int]]

    @property
    def mean_auc(self) -> float:
        return float(np.mean(self.aucs))

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.accuracies))

    def to_json(self) -> dict:
        return {
            "source": self.source,
            "target": self.target,
            "features": list(self.feature_ids),
            "aucs": list(self.aucs),
            "mean_auc": self.mean_auc,
            "accuracies": list(self.accuracies),
            "mean_accuracy": self.mean_accuracy,
            "chi2": self.chi2,
            "p_value": self.p_value,
            "table": self.table,
            "roc_auc_final_repeat": self.roc.auc,
        }


def _score_repeats(source: str, target: Dataset, feature_ids, score_fn, repeats: int
                   ) -> TransferResult:
    aucs, accs = [], []
    scores = None
    for r in range(repeats):
        scores = score_fn(r)
        aucs.append(roc_auc(scores, target.y))
        accs.append(accuracy(scores > 0.5, target.y))
    predicted = (scores > 0.5).astype(np.int8)
    table = confusion_table(predicted, target.y)
    try:
        stat, p = chi2_test(table)
    except ValueError:
        stat = p = None  # all predictions in one class
    return TransferResult(source, target.name, list(feature_ids), aucs, accs,
                          roc_curve(scores, target.y), stat, p, table)


def _fit_and_score(X, y, target_X, config: TransferConfig, key_label: str):
    fc = ForestConfig(n_trees=config.trees, seed=config.seed)

    def score(r: int) -> np.ndarray:
        model = train_forest(X, y, fc, key=rng.derive(config.seed, key_label, r))
        return model.predict_proba(target_X)
    return score


def transfer(source: Dataset, target: Dataset, feature_ids: Sequence[str],
             config: TransferConfig = TransferConfig()) -> TransferResult:
    """Train on all of ``source`` and score ``target``, ``config.repeats`` times."""
    if not feature_ids:
        raise ValueError("feature set is empty")
    fn = _fit_and_score(source.columns(feature_ids), source.y, target.columns(feature_ids),
                        config, "transfer")
    return _score_repeats(source.name, target, feature_ids, fn, config.repeats)


def pooled_transfer(sources: Sequence[tuple[Dataset, Sequence[str]]], target: Dataset,
                    config: TransferConfig = TransferConfig()) -> TransferResult:
    """Transfer from the concatenated sources on the union of their subsets."""
    if len(sources) < 2:
        raise ValueError("pooling needs at least two sources")
    union: list[str] = []
    for _, subset in sources:
        union.extend(f for f in subset if f not in union)
    # keep registry order for a stable column layout
    ref = sources[0][0].feature_ids
    union.sort(key=ref.index)
    X = np.vstack([ds.columns(union) for ds, _ in sources])
    y = np.concatenate([ds.y for ds, _ in sources])
    fn = _fit_and_score(X, y, target.columns(union), config, "transfer")
    name = "+".join(ds.name for ds, _ in sources)
    return _score_repeats(name, target, union, fn, config.repeats)


def random_baseline(target: Dataset, seed: int = 0, repeats: int = 20) -> TransferResult:
    """Coin-toss scores drawn uniformly from [0, 1)."""
    def score(r: int) -> np.ndarray:
        return rng.uniforms(rng.derive(seed, "baseline", r), len(target))
    return _score_repeats("random", target, [], score, repeats)


def load_subset(path) -> list[str]:
    """Feature list from a JSON list, ``{"features": [...]}`` or an RFE trace."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if isinstance(doc, list):
        return [str(f) for f in doc]
    for key in ("chosen_subset", "features"):
        if key in doc:
            return [str(f) for f in doc[key]]
    raise ValueError(f"{path}: no feature list found")
