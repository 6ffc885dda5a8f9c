"""Compare the compiled weight kernels against the pure-NumPy fallback.

Run from the repository root after an editable install:

    python3 benchmarks/benchmark_backends.py [--repeats 7] [--n 20000]

Prints per-function timings for both backends and the speedup ratio, and
verifies that the two implementations agree on the benchmark inputs.
"""

import argparse
import time

import numpy as np

from crm import _fallback

try:
    from crm import _speedups
except ImportError:
    _speedups = None


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=7)
    parser.add_argument("--n", type=int, default=20_000,
                        help="number of history windows")
    parser.add_argument("--d", type=int, default=4, help="history length")
    parser.add_argument("--k", type=int, default=3, help="sample dimension")
    args = parser.parse_args()

    if _speedups is None:
        print("compiled extension not available; nothing to compare")
        return 1

    rng = np.random.default_rng(0)
    n, d, k = args.n, args.d, args.k
    windows = np.ascontiguousarray(rng.uniform(0, 1, size=(n, k * d)))
    target = np.ascontiguousarray(rng.uniform(0, 1, size=k * d))
    xs = np.ascontiguousarray(rng.uniform(0, 1, size=(n, d, k - 1)))
    ys = np.ascontiguousarray(rng.integers(0, 2, size=(n, d)).astype(float))
    tx = np.ascontiguousarray(rng.uniform(0, 1, size=(d, k - 1)))
    ty = np.ascontiguousarray(rng.integers(0, 2, size=d).astype(float))

    cases = [
        ("sqexp_weights", (windows, target, 0.3, 1.0, 0.0635)),
        ("epanechnikov_weights", (windows, target, 0.4, 1.0)),
        ("stratified_weights", (xs, ys, tx, ty, 1.0 / 0.04)),
    ]

    print(f"n={n} windows, d={d}, k={k}, best of {args.repeats}\n")
    print(f"{'function':<24}{'compiled':>12}{'python':>12}{'speedup':>10}")
    for name, case_args in cases:
        fast_fn = getattr(_speedups, name)
        slow_fn = getattr(_fallback, name)
        fast_out = np.asarray(fast_fn(*case_args))
        slow_out = np.asarray(slow_fn(*case_args))
        if not np.allclose(fast_out, slow_out, rtol=1e-10, atol=1e-300):
            raise AssertionError(f"{name}: backends disagree")
        t_fast = best_of(lambda: fast_fn(*case_args), args.repeats)
        t_slow = best_of(lambda: slow_fn(*case_args), args.repeats)
        print(f"{name:<24}{t_fast * 1e3:>10.3f}ms{t_slow * 1e3:>10.3f}ms"
              f"{t_slow / t_fast:>9.2f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
