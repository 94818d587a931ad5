"""Evaluation metrics, fold assignment and the df=1 chi-squared test."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from threadcred import rng


def _binary_labels(labels) -> np.ndarray:
    y = np.asarray(labels)
    if y.ndim != 1:
        raise ValueError("labels must be one-dimensional")
    if not set(np.unique(y).tolist()) <= {0, 1, False, True}:
        raise ValueError("labels must be binary 0/1")
    y = y.astype(np.int8)
    if y.min() == y.max():
        raise ValueError("both classes must be present")
    return y


def roc_auc(scores, labels) -> float:
    """Probability a random positive outscores a random negative, ties half.

    Computed from average ranks (Mann-Whitney U) in O(n log n).
    """
    s = np.asarray(scores, dtype=np.float64)
    y = _binary_labels(labels)
    if s.shape != y.shape:
        raise ValueError("scores and labels differ in length")
    order = np.argsort(s, kind="mergesort")
    sorted_s = s[order]
    # average 1-based rank of each tie group
    starts = np.flatnonzero(np.concatenate(([True], sorted_s[1:] != sorted_s[:-1])))
    ends = np.concatenate((starts[1:], [s.shape[0]]))
    avg_rank = (starts + ends + 1) / 2.0
    ranks = np.empty_like(s)
    ranks[order] = np.repeat(avg_rank, ends - starts)
    n_pos = int(y.sum())
    n_neg = y.shape[0] - n_pos
    u = ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


@dataclass(frozen=True)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    auc: float

    @property
    def points(self) -> list[tuple[float, float, float]]:
        return list(zip(self.fpr.tolist(), self.tpr.tolist(), self.thresholds.tolist()))

    def to_csv(self) -> str:
        lines = ["fpr,tpr,threshold"]
        for f, t, th in self.points:
            lines.append(f"{f!r},{t!r},{th!r}")
        lines.append(f"# auc={self.auc!r}")
        return "\n".join(lines) + "\n"


def roc_curve(scores, labels) -> RocCurve:
    """ROC points at every distinct score, from (0, 0) to (1, 1).

    The first point carries threshold ``inf``; a point at threshold ``t``
    classifies ``score >= t`` as positive.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = _binary_labels(labels)
    order = np.argsort(-s, kind="mergesort")
    s_desc = s[order]
    y_desc = y[order]
    last_of_group = np.flatnonzero(np.concatenate((s_desc[1:] != s_desc[:-1], [True])))
    tp = np.cumsum(y_desc)[last_of_group]
    fp = (last_of_group + 1) - tp
    n_pos = int(y.sum())
    n_neg = y.shape[0] - n_pos
    tpr = np.concatenate(([0.0], tp / n_pos))
    fpr = np.concatenate(([0.0], fp / n_neg))
    thresholds = np.concatenate(([np.inf], s_desc[last_of_group]))
    auc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1])) / 2.0)
    return RocCurve(fpr, tpr, thresholds, auc)


def accuracy(predictions, labels) -> float:
    p = np.asarray(predictions).astype(np.int8)
    y = np.asarray(labels).astype(np.int8)
    if p.shape != y.shape or p.size == 0:
        raise ValueError("predictions and labels must be equal-length and non-empty")
    return float(np.mean(p == y))


def stratified_kfold(labels, k: int, seed: int | None = None, *, key: int | None = None
                     ) -> list[np.ndarray]:
    """Split row indices into ``k`` disjoint, class-stratified folds.

    Each class is shuffled by its own stream and dealt round-robin; the
    second class continues dealing where the first stopped so fold sizes
    differ by at most one as well.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    y = np.asarray(labels)
    if key is None:
        key = rng.derive(0 if seed is None else seed, "kfold")
    assigned: list[list[int]] = [[] for _ in range(k)]
    cursor = 0
    for cls in sorted(np.unique(y).tolist()):
        members = np.flatnonzero(y == cls)
        if members.shape[0] < k:
            raise ValueError(f"class {cls!r} has {members.shape[0]} members, fewer than k={k}")
        shuffled = members[rng.permutation(rng.derive(key, "class", cls), members.shape[0])]
        for i, idx in enumerate(shuffled.tolist()):
            assigned[(cursor + i) % k].append(idx)
        cursor = (cursor + members.shape[0]) % k
    return [np.sort(np.asarray(f, dtype=np.int64)) for f in assigned]


def chi2_p(statistic: float, df: int = 1) -> float:
    """Upper-tail probability of the chi-squared distribution with one dof."""
    if df != 1:
        raise ValueError("only df=1 is supported")
    if statistic < 0 or math.isnan(statistic):
        raise ValueError("statistic must be non-negative")
    return math.erfc(math.sqrt(statistic / 2.0))


def chi2_test(table) -> tuple[float, float]:
    """Pearson chi-squared on a 2x2 table, no continuity correction."""
    obs = np.asarray(table, dtype=np.float64)
    if obs.shape != (2, 2):
        raise ValueError("expected a 2x2 table")
    if (obs < 0).any():
        raise ValueError("counts must be non-negative")
    rows = obs.sum(axis=1)
    cols = obs.sum(axis=0)
    if (rows == 0).any() or (cols == 0).any():
        raise ValueError("chi-squared undefined with a zero marginal")
    expected = np.outer(rows, cols) / obs.sum()
    stat = float(((obs - expected) ** 2 / expected).sum())
    return stat, chi2_p(stat)


def confusion_table(predictions, labels) -> list[list[int]]:
    """2x2 counts, rows = predicted (1, 0), columns = actual (1, 0)."""
    p = np.asarray(predictions).astype(np.int8)
    y = np.asarray(labels).astype(np.int8)
    return [
        [int(((p == 1) & (y == 1)).sum()), int(((p == 1) & (y == 0)).sum())],
        [int(((p == 0) & (y == 1)).sum()), int(((p == 0) & (y == 0)).sum())],
    ]
