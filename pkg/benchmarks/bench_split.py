#!/usr/bin/env python3
"""Benchmark the compiled split kernel against the numpy fallback.

Times the raw node-level split search and a full boosted-tree fit with each
backend, and verifies the two pick identical splits along the way.

    python benchmarks/bench_split.py [--rows 20000] [--features 60] [--rounds 10]
"""

import argparse
import time

import numpy as np

from c19risk._kernels import BACKEND, find_best_split_py

try:
    from c19risk._kernels import _split_cy

    find_best_split_cy = _split_cy.find_best_split
except ImportError:
    find_best_split_cy = None

from c19risk.models import TrainConfig
from c19risk.models import boosting
from c19risk.models.logistic import sigmoid


def time_kernel(fn, X, g, h, repeats):
    best = float("inf")
    result = None
    for _ in range(repeats):
        start = time.perf_counter()
        result = fn(X, g, h, 1.0, 0.0, 1e-3)
        best = min(best, time.perf_counter() - start)
    return best, result


def bench_node_level(rows, features, repeats=5):
    rng = np.random.default_rng(0)
    X = np.ascontiguousarray(
        np.where(rng.random((rows, features)) < 0.15, 1.0, 0.0)
    )
    X[:, 0] = rng.integers(18, 96, size=rows)  # one continuous column
    p = sigmoid(rng.normal(-2.0, 0.5, size=rows))
    y = (rng.random(rows) < p).astype(float)
    g = p - y
    h = p * (1 - p)

    print(f"node-level split search: {rows} rows x {features} features")
    t_py, r_py = time_kernel(find_best_split_py, X, g, h, repeats)
    print(f"  numpy fallback : {t_py * 1e3:8.2f} ms  -> {r_py}")
    if find_best_split_cy is None:
        print("  compiled kernel: not built")
        return
    t_cy, r_cy = time_kernel(find_best_split_cy, X, g, h, repeats)
    print(f"  compiled kernel: {t_cy * 1e3:8.2f} ms  -> {r_cy}")
    assert r_py == r_cy, "backends disagree"
    print(f"  speedup: {t_py / t_cy:.2f}x (identical split chosen)")


def bench_training(rows, features, rounds):
    rng = np.random.default_rng(1)
    X = np.ascontiguousarray(
        np.where(rng.random((rows, features)) < 0.15, 1.0, 0.0)
    )
    X[:, 0] = rng.integers(18, 96, size=rows)
    margin = -3.0 + 0.03 * X[:, 0] + X[:, 1] - 0.5 * X[:, 2]
    y = (rng.random(rows) < sigmoid(margin)).astype(float)
    names = [f"f{i}" for i in range(features)]
    cfg = TrainConfig(rounds=rounds, max_depth=4)

    print(f"\nfull training: {rows} rows x {features} features, {rounds} rounds, depth 4")
    results = {}
    backends = [("numpy fallback", find_best_split_py)]
    if find_best_split_cy is not None:
        backends.append(("compiled kernel", find_best_split_cy))
    original = boosting.find_best_split
    try:
        for label, fn in backends:
            boosting.find_best_split = fn
            start = time.perf_counter()
            model = boosting.train_boosted_trees(X, y, names, cfg)
            elapsed = time.perf_counter() - start
            results[label] = (elapsed, model.loss_history[-1])
            print(f"  {label:15s}: {elapsed:6.2f} s  final loss {model.loss_history[-1]:.6f}")
    finally:
        boosting.find_best_split = original
    if len(results) == 2:
        (t_py, l_py), (t_cy, l_cy) = results["numpy fallback"], results["compiled kernel"]
        assert l_py == l_cy, "backends trained different models"
        print(f"  speedup: {t_py / t_cy:.2f}x (identical final loss)")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--rows", type=int, default=20_000)
    parser.add_argument("--features", type=int, default=60)
    parser.add_argument("--rounds", type=int, default=10)
    args = parser.parse_args()
    print(f"active backend at import time: {BACKEND}\n")
    bench_node_level(args.rows, args.features)
    bench_training(args.rows, args.features, args.rounds)


if __name__ == "__main__":
    main()
