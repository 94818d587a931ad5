# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled forest kernels.

Mirrors ``_pykernels`` step for step (same stream layout, node numbering,
split scoring and tie-breaking) so forests are bit-identical across backends.
"""

import numpy as np

from libc.stdint cimport int32_t, int64_t, uint8_t, uint64_t
from libc.stdlib cimport free, malloc, realloc

BACKEND = "cython"

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double INV53 = 1.0 / 9007199254740992.0


cdef inline uint64_t _mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t _draw(uint64_t key, uint64_t counter) noexcept nogil:
    return _mix64(key + (counter + 1) * GOLDEN)


cdef inline Py_ssize_t _below(uint64_t key, uint64_t counter, Py_ssize_t n) noexcept nogil:
    return <Py_ssize_t>(<double>(_draw(key, counter) >> 11) * INV53 * <double>n)


cdef inline void _insertion(int32_t* a, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef int32_t v
    for i in range(1, n):
        v = a[i]
        j = i - 1
        while j >= 0 and a[j] > v:
            a[j + 1] = a[j]
            j -= 1
        a[j + 1] = v


cdef void _sort_ints(int32_t* a, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, j, mid
    cdef int32_t pivot, tmp
    while n > 16:
        mid = n >> 1
        if a[mid] < a[0]:
            tmp = a[mid]; a[mid] = a[0]; a[0] = tmp
        if a[n - 1] < a[0]:
            tmp = a[n - 1]; a[n - 1] = a[0]; a[0] = tmp
        if a[n - 1] < a[mid]:
            tmp = a[n - 1]; a[n - 1] = a[mid]; a[mid] = tmp
        pivot = a[mid]
        i = -1
        j = n
        while True:
            i += 1
            while a[i] < pivot:
                i += 1
            j -= 1
            while a[j] > pivot:
                j -= 1
            if i >= j:
                break
            tmp = a[i]; a[i] = a[j]; a[j] = tmp
        # recurse into the smaller half, loop on the larger
        if j + 1 < n - j - 1:
            _sort_ints(a, j + 1)
            a = a + j + 1
            n = n - j - 1
        else:
            _sort_ints(a + j + 1, n - j - 1)
            n = j + 1
    _insertion(a, n)


cdef struct Tree:
    int32_t* feature
    double* threshold
    int32_t* left
    int32_t* right
    double* value
    Py_ssize_t size
    Py_ssize_t cap


cdef int _tree_reserve(Tree* t, Py_ssize_t cap) noexcept nogil:
    t.feature = <int32_t*>realloc(t.feature, cap * sizeof(int32_t))
    t.threshold = <double*>realloc(t.threshold, cap * sizeof(double))
    t.left = <int32_t*>realloc(t.left, cap * sizeof(int32_t))
    t.right = <int32_t*>realloc(t.right, cap * sizeof(int32_t))
    t.value = <double*>realloc(t.value, cap * sizeof(double))
    if not (t.feature and t.threshold and t.left and t.right and t.value):
        return -1
    t.cap = cap
    return 0


cdef inline Py_ssize_t _new_node(Tree* t) noexcept nogil:
    cdef Py_ssize_t i = t.size
    t.feature[i] = -1
    t.threshold[i] = 0.0
    t.left[i] = -1
    t.right[i] = -1
    t.value[i] = 0.0
    t.size += 1
    return i


cdef int _grow_tree(const int32_t[:, ::1] R, const double[:, ::1] V, const int32_t[::1] nd,
                    const uint8_t[::1] y, Py_ssize_t mtry, Py_ssize_t max_depth,
                    Py_ssize_t min_leaf, uint64_t tk, Tree* t, int32_t* samples, int32_t* keys,
                    int32_t* cnt, int32_t* posc, Py_ssize_t* perm, Py_ssize_t* stack) noexcept nogil:
    # R[f, row]: dense rank of row's value among the distinct values V[f, :nd[f]].
    # Candidate splits and scores only depend on per-rank class counts, so the
    # counting scan and the sort scan below are interchangeable.
    cdef Py_ssize_t k = R.shape[0]
    cdef Py_ssize_t n = R.shape[1]
    cdef Py_ssize_t i, j, s, f, m, start, end, depth, node, top, pos, evaluated
    cdef Py_ssize_t pl, ql, pr, qr, nl, nr, best_f, lnode, rnode, lo_i, hi_i, r, prev, d
    cdef Py_ssize_t best_rank, lo_r, hi_r
    cdef uint64_t nk
    cdef double score, best_score, thr, best_thr, lo, hi
    cdef int32_t tmp, row
    cdef bint have_best
    # nodes of this tree are appended after the ones already in t
    cdef Py_ssize_t base = t.size

    for i in range(n):
        samples[i] = <int32_t>_below(tk, i, n)

    if t.size + 1 > t.cap:
        if _tree_reserve(t, 2 * t.cap + 2) != 0:
            return -1
    stack[0] = 0
    stack[1] = n
    stack[2] = 0
    stack[3] = _new_node(t) - base
    top = 1

    while top > 0:
        top -= 1
        start = stack[4 * top]
        end = stack[4 * top + 1]
        depth = stack[4 * top + 2]
        node = stack[4 * top + 3]
        m = end - start
        pos = 0
        for i in range(start, end):
            pos += y[samples[i]]
        t.value[base + node] = <double>pos / <double>m
        if pos == 0 or pos == m or m < 2 * min_leaf or (max_depth >= 0 and depth >= max_depth):
            continue

        nk = _draw(tk, n + node)
        for i in range(k):
            perm[i] = i
        have_best = False
        best_score = 0.0
        best_f = -1
        best_thr = 0.0
        best_rank = -1
        evaluated = 0
        s = 0
        while s < k and evaluated < mtry:
            j = s + _below(nk, s, k - s)
            f = perm[j]
            perm[j] = perm[s]
            perm[s] = f
            s += 1
            d = nd[f]
            if d < 2:
                continue

            if d <= 4 * m:
                for r in range(d):
                    cnt[r] = 0
                    posc[r] = 0
                lo_r = d
                hi_r = -1
                for i in range(start, end):
                    row = samples[i]
                    r = R[f, row]
                    cnt[r] += 1
                    posc[r] += y[row]
                    if r < lo_r:
                        lo_r = r
                    if r > hi_r:
                        hi_r = r
                if lo_r == hi_r:
                    continue
                evaluated += 1
                pl = 0
                nl = 0
                prev = -1
                for r in range(lo_r, hi_r + 1):
                    if cnt[r] == 0:
                        continue
                    if prev >= 0 and nl >= min_leaf and m - nl >= min_leaf:
                        nr = m - nl
                        ql = nl - pl
                        pr = pos - pl
                        qr = nr - pr
                        score = (<double>(pl * pl + ql * ql)) / <double>nl + (
                            <double>(pr * pr + qr * qr)) / <double>nr
                        lo = V[f, prev]
                        hi = V[f, r]
                        thr = (lo + hi) * 0.5
                        if thr >= hi:
                            thr = lo
                        if (not have_best or score > best_score or
                                (score == best_score and (f < best_f or (f == best_f and thr < best_thr)))):
                            have_best = True
                            best_score = score
                            best_f = f
                            best_thr = thr
                            best_rank = prev
                    nl += cnt[r]
                    pl += posc[r]
                    prev = r
            else:
                for i in range(m):
                    row = samples[start + i]
                    keys[i] = 2 * R[f, row] + y[row]
                _sort_ints(keys, m)
                if (keys[0] >> 1) == (keys[m - 1] >> 1):
                    continue
                evaluated += 1
                pl = 0
                for i in range(m - 1):
                    pl += keys[i] & 1
                    if (keys[i] >> 1) == (keys[i + 1] >> 1):
                        continue
                    nl = i + 1
                    nr = m - nl
                    if nl < min_leaf or nr < min_leaf:
                        continue
                    ql = nl - pl
                    pr = pos - pl
                    qr = nr - pr
                    score = (<double>(pl * pl + ql * ql)) / <double>nl + (
                        <double>(pr * pr + qr * qr)) / <double>nr
                    lo = V[f, keys[i] >> 1]
                    hi = V[f, keys[i + 1] >> 1]
                    thr = (lo + hi) * 0.5
                    if thr >= hi:
                        thr = lo
                    if (not have_best or score > best_score or
                            (score == best_score and (f < best_f or (f == best_f and thr < best_thr)))):
                        have_best = True
                        best_score = score
                        best_f = f
                        best_thr = thr
                        best_rank = keys[i] >> 1
        if not have_best:
            continue

        # x <= thr  <=>  rank <= best_rank, since lo <= thr < hi
        lo_i = start
        hi_i = end - 1
        while lo_i <= hi_i:
            if R[best_f, samples[lo_i]] <= best_rank:
                lo_i += 1
            else:
                tmp = samples[lo_i]
                samples[lo_i] = samples[hi_i]
                samples[hi_i] = tmp
                hi_i -= 1

        if t.size + 2 > t.cap:
            if _tree_reserve(t, 2 * t.cap + 2) != 0:
                return -1
        t.feature[base + node] = <int32_t>best_f
        t.threshold[base + node] = best_thr
        lnode = _new_node(t) - base
        rnode = _new_node(t) - base
        t.left[base + node] = <int32_t>lnode
        t.right[base + node] = <int32_t>rnode

        stack[4 * top] = lo_i
        stack[4 * top + 1] = end
        stack[4 * top + 2] = depth + 1
        stack[4 * top + 3] = rnode
        top += 1
        stack[4 * top] = start
        stack[4 * top + 1] = lo_i
        stack[4 * top + 2] = depth + 1
        stack[4 * top + 3] = lnode
        top += 1
    return 0


def _rank_tables(X):
    n, k = X.shape
    ranks = np.empty((k, n), dtype=np.int32)
    values = np.zeros((k, max(n, 1)), dtype=np.float64)
    n_distinct = np.empty(k, dtype=np.int32)
    for f in range(k):
        uniq, inverse = np.unique(X[:, f], return_inverse=True)
        ranks[f] = inverse.reshape(-1)
        values[f, : uniq.shape[0]] = uniq
        n_distinct[f] = uniq.shape[0]
    return ranks, values, n_distinct


def fit_forest(X, y, Py_ssize_t n_trees, Py_ssize_t mtry, Py_ssize_t max_depth,
               Py_ssize_t min_leaf, key):
    X = np.ascontiguousarray(X, dtype=np.float64)
    ranks, values, n_distinct = _rank_tables(X)
    cdef const int32_t[:, ::1] Rv = ranks
    cdef const double[:, ::1] Vv = values
    cdef const int32_t[::1] ndv = n_distinct
    cdef const uint8_t[::1] yv = np.ascontiguousarray(y, dtype=np.uint8)
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t k = X.shape[1]
    cdef uint64_t fkey = <uint64_t>int(key)
    cdef Py_ssize_t ti, rc = 0
    cdef Tree t

    offsets = np.zeros(n_trees + 1, dtype=np.int64)

    t.feature = NULL
    t.threshold = NULL
    t.left = NULL
    t.right = NULL
    t.value = NULL
    t.size = 0
    t.cap = 0
    cdef int32_t* work = <int32_t*>malloc(4 * (n + 1) * sizeof(int32_t))
    cdef Py_ssize_t* perm = <Py_ssize_t*>malloc((k + 1) * sizeof(Py_ssize_t))
    # the depth-first stack never holds more than n + 1 pending nodes
    cdef Py_ssize_t* stack = <Py_ssize_t*>malloc(4 * (n + 2) * sizeof(Py_ssize_t))
    try:
        if not (work and perm and stack) or _tree_reserve(&t, n_trees * (n + 2) + 2) != 0:
            raise MemoryError()
        for ti in range(n_trees):
            with nogil:
                rc = _grow_tree(Rv, Vv, ndv, yv, mtry, max_depth, min_leaf, _draw(fkey, ti), &t,
                                work, work + (n + 1), work + 2 * (n + 1), work + 3 * (n + 1),
                                perm, stack)
            if rc != 0:
                raise MemoryError()
            offsets[ti + 1] = t.size
        out = (
            offsets,
            np.asarray(<int32_t[:t.size]>t.feature).copy(),
            np.asarray(<double[:t.size]>t.threshold).copy(),
            np.asarray(<int32_t[:t.size]>t.left).copy(),
            np.asarray(<int32_t[:t.size]>t.right).copy(),
            np.asarray(<double[:t.size]>t.value).copy(),
        )
    finally:
        free(work)
        free(perm)
        free(stack)
        free(t.feature)
        free(t.threshold)
        free(t.left)
        free(t.right)
        free(t.value)
    return out


def predict_forest(X, offsets, feature, threshold, left, right, value):
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const int64_t[::1] off = np.ascontiguousarray(offsets, dtype=np.int64)
    cdef const int32_t[::1] fv = np.ascontiguousarray(feature, dtype=np.int32)
    cdef const double[::1] tv = np.ascontiguousarray(threshold, dtype=np.float64)
    cdef const int32_t[::1] lv = np.ascontiguousarray(left, dtype=np.int32)
    cdef const int32_t[::1] rv = np.ascontiguousarray(right, dtype=np.int32)
    cdef const double[::1] vv = np.ascontiguousarray(value, dtype=np.float64)
    cdef Py_ssize_t n = Xv.shape[0]
    cdef Py_ssize_t n_trees = off.shape[0] - 1
    cdef Py_ssize_t r, ti, base, node
    cdef double acc
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    with nogil:
        for r in range(n):
            acc = 0.0
            for ti in range(n_trees):
                base = off[ti]
                node = 0
                while fv[base + node] >= 0:
                    if Xv[r, fv[base + node]] <= tv[base + node]:
                        node = lv[base + node]
                    else:
                        node = rv[base + node]
                acc += vv[base + node]
            ov[r] = acc / <double>n_trees
    return out
