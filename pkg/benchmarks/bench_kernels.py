#!/usr/bin/env python3
"""Times the compiled neighbor kernel against the pure Python fallback.

Workload: the K-sweep's two neighbor scans (leave-one-out over the
training set plus the validation scan) at survey scale, then the scan
alone across a few sizes.

    python benchmarks/bench_kernels.py [--n 1240] [--d 10] [--kmax 30] [--repeat 3]
"""

import argparse
import time

import numpy as np

from pipegrade import _kernels


def time_scan(backend, train, queries, kmax, exclude, repeat):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        backend.neighbors(train, queries, kmax, exclude)
        best = min(best, time.perf_counter() - start)
    return best


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--n", type=int, default=1240)
    parser.add_argument("--d", type=int, default=10)
    parser.add_argument("--kmax", type=int, default=30)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    names = _kernels.available_backends()
    print(f"backends: {', '.join(names)}")
    if "native" not in names:
        print("note: compiled kernel not built; only the fallback will run")

    rng = np.random.default_rng(0)
    n_train = int(args.n * 0.75)
    n_val = args.n - n_train
    train = rng.integers(1, 6, size=(n_train, args.d)).astype(np.int64)
    val = rng.integers(1, 6, size=(n_val, args.d)).astype(np.int64)
    loo_exclude = np.arange(n_train, dtype=np.int64)
    val_exclude = np.full(n_val, -1, dtype=np.int64)

    print(f"\nsweep workload: train={n_train} validation={n_val} d={args.d} kmax={args.kmax}")
    print(f"{'backend':<10}{'LOO scan':>12}{'val scan':>12}{'total':>12}")
    totals = {}
    for name in names:
        backend = _kernels._backends[name]
        t_loo = time_scan(backend, train, train, args.kmax, loo_exclude, args.repeat)
        t_val = time_scan(backend, train, val, args.kmax, val_exclude, args.repeat)
        totals[name] = t_loo + t_val
        print(f"{name:<10}{t_loo * 1e3:>10.1f}ms{t_val * 1e3:>10.1f}ms"
              f"{totals[name] * 1e3:>10.1f}ms")
    if len(totals) == 2:
        print(f"speedup: {totals['python'] / totals['native']:.1f}x")

    print("\nsingle scan across sizes (kmax=7):")
    print(f"{'n':>6}{'d':>4}" + "".join(f"{name:>12}" for name in names))
    for n in (100, 400, 1240, 3000):
        row = f"{n:>6}{args.d:>4}"
        data = rng.integers(1, 6, size=(n, args.d)).astype(np.int64)
        queries = rng.integers(1, 6, size=(max(1, n // 4), args.d)).astype(np.int64)
        exclude = np.full(len(queries), -1, dtype=np.int64)
        for name in names:
            t = time_scan(_kernels._backends[name], data, queries, 7, exclude, args.repeat)
            row += f"{t * 1e3:>10.1f}ms"
        print(row)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
