"""Compare the compiled and pure-Python forest kernels.

Fits and scores identical forests with both backends, checks the outputs
are bit-identical and reports per-tree times and the speedup.

    python3 benchmarks/bench_kernels.py --rows 100 --features 20 --trees 50
"""

import argparse
import math
import sys
import time

import numpy as np

from threadcred import rng
from threadcred.learn import kernels
from threadcred.synthetic import informative_noise


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=100)
    ap.add_argument("--features", type=int, default=20)
    ap.add_argument("--trees", type=int, default=50)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    if kernels.compiled_backend is None:
        print("compiled extension not built; nothing to compare", file=sys.stderr)
        return 1
    ds = informative_noise(n=args.rows, informative=min(5, args.features),
                           noise=max(0, args.features - 5), seed=0)
    X, y = ds.X, ds.y.astype(np.uint8)
    mtry = math.ceil(math.sqrt(X.shape[1]))
    key = rng.derive(0, "bench")
    fit_args = (X, y, args.trees, mtry, -1, 1, key)

    rows = []
    outputs = {}
    for name, backend in (("python", kernels.python_backend), ("cython", kernels.compiled_backend)):
        fit_t, forest = best_of(lambda: backend.fit_forest(*fit_args), args.repeat)
        pred_t, probs = best_of(lambda: backend.predict_forest(X, *forest), args.repeat)
        outputs[name] = (forest, probs)
        rows.append((name, fit_t, pred_t))

    same = all(a.tobytes() == b.tobytes() for a, b in zip(outputs["python"][0], outputs["cython"][0]))
    same = same and outputs["python"][1].tobytes() == outputs["cython"][1].tobytes()

    print(f"rows={args.rows} features={args.features} trees={args.trees} mtry={mtry}")
    print(f"{'backend':8} {'fit ms':>10} {'us/tree':>10} {'predict ms':>11}")
    for name, fit_t, pred_t in rows:
        print(f"{name:8} {fit_t * 1e3:10.2f} {fit_t / args.trees * 1e6:10.1f} {pred_t * 1e3:11.3f}")
    print(f"fit speedup {rows[0][1] / rows[1][1]:.1f}x, predict speedup {rows[0][2] / rows[1][2]:.1f}x")
    print(f"bit-identical outputs: {same}")
    return 0 if same else 2


if __name__ == "__main__":
    sys.exit(main())
