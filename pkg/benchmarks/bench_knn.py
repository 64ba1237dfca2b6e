"""Benchmark the compiled KNN kernel against the pure-numpy fallback.

The KNN vote dominates wrapper-fitness time, which in turn dominates a full
run, so this is the number that matters for end-to-end speed.

Usage: python benchmarks/bench_knn.py [--rows 2000] [--queries 500]
"""
import argparse
import importlib
import time

import numpy as np


def load_backends():
    backends = {}
    try:
        backends["c"] = importlib.import_module("swarmfe._knn_c")
    except ImportError:
        print("compiled kernel not built; benchmarking fallback only")
    backends["python"] = importlib.import_module("swarmfe._knn_py")
    return backends


def bench(kernel, tx, ty, qx, k, n_classes, repeats=5):
    best = float("inf")
    preds = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        preds = kernel.predict_remapped(tx, ty, qx, k, n_classes)
        best = min(best, time.perf_counter() - t0)
    return best, preds


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--rows", type=int, default=2000)
    parser.add_argument("--queries", type=int, default=500)
    parser.add_argument("--features", type=int, default=20)
    parser.add_argument("--k", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    tx = rng.random((args.rows, args.features))
    ty = rng.integers(0, 3, args.rows).astype(np.int64)
    qx = rng.random((args.queries, args.features))

    backends = load_backends()
    results = {}
    for name, kernel in backends.items():
        seconds, preds = bench(kernel, tx, ty, qx, args.k, 3)
        results[name] = (seconds, preds)
        rate = args.queries / seconds
        print(f"{name:>6}: {seconds * 1e3:8.2f} ms  ({rate:,.0f} queries/s)")

    if len(results) == 2:
        (sc, pc), (sp, pp) = results["c"], results["python"]
        assert np.array_equal(pc, pp), "backends disagree on predictions"
        print(f"speedup: {sp / sc:.1f}x, predictions identical")


if __name__ == "__main__":
    main()
