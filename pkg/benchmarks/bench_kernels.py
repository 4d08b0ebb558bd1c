"""Timing comparison of the compiled kernels against the pure-python twins.

Run as ``python benchmarks/bench_kernels.py``.  The three kernels dominate
the Monte Carlo hot path: the overlap sweep (once per replication), the
overlap-sum covariance estimator, and the constant-model likelihood that the
optimizer and the quadrature evaluate hundreds of times per dataset.
"""

import time

import numpy as np

from asynclik import _kernels_py

try:
    from asynclik import _kernels

    HAVE_EXT = True
except ImportError:
    _kernels = None
    HAVE_EXT = False


def poisson_partition(rng, rate, T=1.0):
    n = rng.poisson(rate * T)
    return np.concatenate(([0.0], np.sort(rng.uniform(0, T, n)), [T]))


def bench(label, fn, args, repeat=200):
    fn(*args)  # warm up
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    return (time.perf_counter() - t0) / repeat


def main():
    rng = np.random.default_rng(0)
    rows = []

    for size in (100, 500, 2000):
        e1 = poisson_partition(rng, size)
        e2 = poisson_partition(rng, size)
        y1 = rng.normal(size=e1.size - 1)
        y2 = rng.normal(size=e2.size - 1)
        r = min(e1.size, e2.size) - 1
        s = np.sort(rng.uniform(0, 1, r))[::-1].copy()
        a = rng.normal(size=r)
        b = rng.normal(size=r)
        kernel_args = {
            "overlap_pairs": (e1, e2),
            "hy_sum": (e1, e2, y1, y2),
            "paired_gaussian_loglik": (
                s, a, b, 1.0, 1.0, e1.size - 1, e2.size - 1, 1.0, 1.1, 0.45,
            ),
        }
        for name, args in kernel_args.items():
            t_py = bench(name, getattr(_kernels_py, name), args)
            if HAVE_EXT:
                t_cy = bench(name, getattr(_kernels, name), args)
                rows.append((name, size, t_py, t_cy, t_py / t_cy))
            else:
                rows.append((name, size, t_py, None, None))

    header = f"{'kernel':28}{'size':>6}{'python':>12}{'cython':>12}{'speedup':>9}"
    print(header)
    print("-" * len(header))
    for name, size, t_py, t_cy, ratio in rows:
        line = f"{name:28}{size:>6}{t_py * 1e6:>10.1f}us"
        if t_cy is not None:
            line += f"{t_cy * 1e6:>10.1f}us{ratio:>8.1f}x"
        else:
            line += f"{'n/a':>12}{'n/a':>9}"
        print(line)
    if not HAVE_EXT:
        print("\ncompiled extension not importable; showing fallback only")


if __name__ == "__main__":
    main()
