import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from threadcred import rng
from threadcred.learn import (ForestConfig, ForestModel, accuracy, chi2_p, chi2_test,
                              confusion_table, predict_proba, roc_auc, roc_curve,
                              stratified_kfold, train_forest)
from threadcred.learn import kernels
from threadcred.synthetic import two_gaussians


def brute_auc(scores, labels):
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    wins = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p in pos for n in neg)
    return wins / (len(pos) * len(neg))


def test_auc_known_values():
    assert roc_auc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == 0.75
    assert roc_auc([1, 1, 1, 1], [0, 1, 0, 1]) == 0.5
    with pytest.raises(ValueError):
        roc_auc([0.1, 0.2], [1, 1])


@given(st.lists(st.tuples(st.integers(0, 5), st.booleans()), min_size=2, max_size=60))
def test_auc_matches_pair_count(rows):
    labels = [int(b) for _, b in rows]
    if len(set(labels)) < 2:
        return
    scores = [float(s) for s, _ in rows]
    assert abs(roc_auc(scores, labels) - brute_auc(scores, labels)) <= 1e-12
    assert abs(roc_curve(scores, labels).auc - brute_auc(scores, labels)) <= 1e-12


def test_roc_curve_shape_and_csv():
    c = roc_curve([0.9, 0.8, 0.8, 0.1], [1, 0, 1, 0])
    assert c.fpr[0] == 0 and c.tpr[0] == 0 and c.fpr[-1] == 1 and c.tpr[-1] == 1
    assert math.isinf(c.thresholds[0])
    assert np.all(np.diff(c.fpr) >= 0) and np.all(np.diff(c.tpr) >= 0)
    text = c.to_csv()
    assert text.startswith("fpr,tpr,threshold\n") and "# auc=" in text


@given(st.lists(st.booleans(), min_size=20, max_size=120), st.integers(2, 10), st.integers(0, 99))
def test_stratified_kfold_partitions(bits, k, seed):
    y = np.array(bits, dtype=int)
    if min(y.sum(), len(y) - y.sum()) < k:
        return
    folds = stratified_kfold(y, k, seed)
    allidx = np.sort(np.concatenate(folds))
    assert np.array_equal(allidx, np.arange(len(y)))
    sizes = [len(f) for f in folds]
    assert max(sizes) - min(sizes) <= 1
    for cls in (0, 1):
        counts = [int((y[f] == cls).sum()) for f in folds]
        assert max(counts) - min(counts) <= 1


def test_kfold_rejects_small_class():
    with pytest.raises(ValueError):
        stratified_kfold([0] * 20 + [1] * 3, 10)


def test_chi2():
    assert abs(chi2_p(2.803) - 0.09409) < 5e-5
    assert chi2_p(0.0) == 1.0
    stat, p = chi2_test([[10, 5], [5, 10]])
    assert abs(stat - 10 / 3) < 1e-12
    with pytest.raises(ValueError):
        chi2_test([[3, 4], [0, 0]])
    with pytest.raises(ValueError):
        chi2_p(-1)


def test_confusion_and_accuracy():
    assert confusion_table([1, 1, 0, 0], [1, 0, 1, 0]) == [[1, 1], [1, 1]]
    assert accuracy([1, 0, 1], [1, 1, 1]) == pytest.approx(2 / 3)


def _data(n, k, seed):
    X = rng.uniforms(rng.derive(seed, "X"), n * k).reshape(n, k)
    X = np.round(X * 7)  # many ties
    y = (X[:, 0] + rng.uniforms(rng.derive(seed, "e"), n) * 4 > 5).astype(np.uint8)
    y[0], y[1] = 0, 1
    return X, y


@pytest.mark.skipif(kernels.compiled_backend is None, reason="extension not built")
@pytest.mark.parametrize("n,k,depth,leaf", [(30, 3, -1, 1), (120, 9, -1, 2), (200, 20, 4, 1),
                                            (57, 1, -1, 5)])
def test_backends_bit_identical(n, k, depth, leaf):
    X, y = _data(n, k, n + k)
    key = rng.derive(1, "parity", n)
    mtry = max(1, math.ceil(math.sqrt(k)))
    a = kernels.python_backend.fit_forest(X, y, 7, mtry, depth, leaf, key)
    b = kernels.compiled_backend.fit_forest(X, y, 7, mtry, depth, leaf, key)
    for u, v in zip(a, b):
        assert u.tobytes() == v.tobytes()
    pa = kernels.python_backend.predict_forest(X, *a)
    pb = kernels.compiled_backend.predict_forest(X, *b)
    assert pa.tobytes() == pb.tobytes()


def test_forest_fits_separable_data_and_roundtrips(tmp_path):
    ds = two_gaussians(200, 4, 4.0, seed=1)
    model = train_forest(ds.X, ds.y, ForestConfig(n_trees=20, seed=3))
    assert accuracy(model.predict(ds.X), ds.y) > 0.95
    p = tmp_path / "f.json"
    model.save(p)
    again = ForestModel.load(p)
    assert again.predict_proba(ds.X).tobytes() == model.predict_proba(ds.X).tobytes()
    assert isinstance(predict_proba(model, ds.X[0]), float)


def test_forest_leaf_invariants():
    X, y = _data(80, 5, 0)
    model = train_forest(X, y, ForestConfig(n_trees=5, min_leaf=3, max_depth=4, seed=1))
    for t in range(model.n_trees):
        tree = model.tree(t)
        leaves = tree["feature"] == -1
        assert np.all((tree["value"][leaves] >= 0) & (tree["value"][leaves] <= 1))
        internal = ~leaves
        assert np.all(tree["left"][internal] > np.flatnonzero(internal))
    probs = model.predict_proba(X)
    assert np.all((probs >= 0) & (probs <= 1))


def test_forest_input_validation():
    with pytest.raises(ValueError):
        train_forest([[1.0], [2.0]], [1, 1])
    with pytest.raises(ValueError):
        train_forest([[np.nan], [2.0]], [0, 1])
    with pytest.raises(ValueError):
        train_forest([[1.0], [2.0]], [0, 2])
    model = train_forest([[1.0], [2.0]], [0, 1], ForestConfig(n_trees=2))
    with pytest.raises(ValueError):
        model.predict_proba([[1.0, 2.0]])


def test_constant_features_make_root_leaves():
    X = np.ones((10, 3))
    y = np.array([0, 1] * 5)
    model = train_forest(X, y, ForestConfig(n_trees=3))
    assert model.n_trees == 3 and np.all(model.feature == -1)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32), st.integers(10, 60))
def test_forest_seeded_determinism(seed, n):
    X, y = _data(n, 4, seed % 1000)
    cfg = ForestConfig(n_trees=4, seed=seed)
    a, b = train_forest(X, y, cfg), train_forest(X, y, cfg)
    assert a.predict_proba(X).tobytes() == b.predict_proba(X).tobytes()


def test_pure_fallback_selected_by_environment():
    import os
    import subprocess
    import sys
    env = dict(os.environ, THREADCRED_PURE="1")
    out = subprocess.run([sys.executable, "-c", "from threadcred.learn import BACKEND; print(BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
