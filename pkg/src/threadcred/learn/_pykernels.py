"""Pure-Python forest kernels.

Reference implementation of the tree-growing procedure; ``_ckernels.pyx``
reproduces it operation for operation, so both backends grow bit-identical
forests from the same key.

Procedure for one tree with key ``tk``:

* bootstrap row ``i`` is ``below(tk, i, n)`` for ``i < n``
* nodes are numbered in creation (depth-first, left-first) order; node ``j``
  samples features with key ``draw(tk, n + j)`` by a lazy Fisher-Yates
  shuffle, stopping after ``mtry`` non-constant candidates
* a split maximises ``(pl^2 + ql^2)/nl + (pr^2 + qr^2)/nr`` (equivalent to
  minimising weighted Gini), ties to lowest feature index then lowest
  threshold; thresholds are midpoints between distinct sorted values
"""

from __future__ import annotations

import numpy as np

from threadcred.rng import below, draw

BACKEND = "python"


def _best_split(xs: np.ndarray, ys: np.ndarray, min_leaf: int):
    order = np.argsort(xs, kind="stable")
    xs = xs[order]
    ys = ys[order].astype(np.int64)
    m = xs.shape[0]
    if xs[0] == xs[m - 1]:
        return None
    pos_left = np.cumsum(ys)[:-1]
    n_left = np.arange(1, m, dtype=np.int64)
    n_right = m - n_left
    pos_right = pos_left[-1] + ys[-1] - pos_left
    neg_left = n_left - pos_left
    neg_right = n_right - pos_right
    valid = (xs[:-1] < xs[1:]) & (n_left >= min_leaf) & (n_right >= min_leaf)
    if not valid.any():
        return None
    score = (pos_left * pos_left + neg_left * neg_left) / n_left + (
        pos_right * pos_right + neg_right * neg_right
    ) / n_right
    idx = np.flatnonzero(valid)
    best = idx[np.argmax(score[idx])]
    lo = float(xs[best])
    hi = float(xs[best + 1])
    thr = (lo + hi) * 0.5
    if thr >= hi:
        thr = lo
    return float(score[best]), thr


def _grow_tree(X, y, mtry, max_depth, min_leaf, tk):
    n, k = X.shape
    samples = np.array([below(tk, i, n) for i in range(n)], dtype=np.int64)

    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []

    def new_node() -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        return len(feature) - 1

    stack = [(samples, 0, new_node())]
    while stack:
        idx, depth, node = stack.pop()
        m = idx.shape[0]
        ys = y[idx]
        pos = int(ys.sum())
        value[node] = pos / m
        if pos == 0 or pos == m or m < 2 * min_leaf or (0 <= max_depth <= depth):
            continue

        nk = draw(tk, n + node)
        perm = list(range(k))
        best = None
        evaluated = 0
        s = 0
        while s < k and evaluated < mtry:
            j = s + below(nk, s, k - s)
            perm[s], perm[j] = perm[j], perm[s]
            f = perm[s]
            s += 1
            xs = X[idx, f]
            if xs.min() == xs.max():
                continue
            evaluated += 1
            found = _best_split(xs, ys, min_leaf)
            if found is None:
                continue
            score, thr = found
            if (
                best is None
                or score > best[0]
                or (score == best[0] and (f < best[1] or (f == best[1] and thr < best[2])))
            ):
                best = (score, f, thr)
        if best is None:
            continue

        _, f, thr = best
        go_left = X[idx, f] <= thr
        feature[node] = f
        threshold[node] = thr
        lnode = new_node()
        rnode = new_node()
        left[node] = lnode
        right[node] = rnode
        # right pushed first so the left child is numbered and grown next
        stack.append((idx[~go_left], depth + 1, rnode))
        stack.append((idx[go_left], depth + 1, lnode))
    return feature, threshold, left, right, value


def fit_forest(X, y, n_trees, mtry, max_depth, min_leaf, key):
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.uint8)
    offsets = [0]
    parts: list[tuple] = []
    for t in range(n_trees):
        tree = _grow_tree(X, y, mtry, max_depth, min_leaf, draw(key, t))
        parts.append(tree)
        offsets.append(offsets[-1] + len(tree[0]))
    return (
        np.asarray(offsets, dtype=np.int64),
        np.concatenate([np.asarray(p[0], dtype=np.int32) for p in parts]),
        np.concatenate([np.asarray(p[1], dtype=np.float64) for p in parts]),
        np.concatenate([np.asarray(p[2], dtype=np.int32) for p in parts]),
        np.concatenate([np.asarray(p[3], dtype=np.int32) for p in parts]),
        np.concatenate([np.asarray(p[4], dtype=np.float64) for p in parts]),
    )


def predict_forest(X, offsets, feature, threshold, left, right, value):
    X = np.ascontiguousarray(X, dtype=np.float64)
    n = X.shape[0]
    n_trees = offsets.shape[0] - 1
    total = np.zeros(n, dtype=np.float64)
    rows = np.arange(n)
    for t in range(n_trees):
        base = int(offsets[t])
        node = np.zeros(n, dtype=np.int64)
        active = feature[base + node] >= 0
        while active.any():
            cur = node[active] + base
            goes_left = X[rows[active], feature[cur]] <= threshold[cur]
            node[active] = np.where(goes_left, left[cur], right[cur])
            active = feature[base + node] >= 0
        total += value[base + node]
    return total / n_trees
