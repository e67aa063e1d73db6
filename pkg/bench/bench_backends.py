"""Benchmark the numba-jitted kernels against their pure-numpy twins.

Runs each hot kernel at representative desk-scale sizes and prints a
table of per-call times plus the speedup. Works regardless of the
PERMBO_DISABLE_NUMBA setting because it imports both implementation
sets directly; without numba installed it reports the numpy path only.

Usage: python bench/bench_backends.py [--repeats 200]
"""

import argparse
import time

import numpy as np

from permbo import accel


def perms(rng, n, d):
    return np.stack([rng.permutation(d) for _ in range(n)]).astype(np.int64)


def timeit(fn, repeats):
    fn()  # warm (jit compile / cache load)
    start = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - start) / repeats


def build_cases(rng):
    a, b = rng.permutation(15).astype(np.int64), rng.permutation(15).astype(np.int64)
    x100 = perms(rng, 100, 15)
    x200 = perms(rng, 200, 10)
    q50 = perms(rng, 50, 15)
    W = np.triu(rng.standard_normal((15, 15)), 1)
    A15 = rng.standard_normal((15, 15))
    B15 = rng.standard_normal((15, 15))
    coords = rng.uniform(0, 1000, size=(15, 2))
    batch = perms(rng, 500, 15)
    return [
        ("discordant_count d=15", lambda f: f(a, b),
         accel.discordant_count_np, "discordant_count_nb"),
        ("discordance_matrix 100x15", lambda f: f(x100),
         accel.discordance_matrix_np, "discordance_matrix_nb"),
        ("discordance_matrix 200x10", lambda f: f(x200),
         accel.discordance_matrix_np, "discordance_matrix_nb"),
        ("cross_discordance 100x50", lambda f: f(x100, q50),
         accel.cross_discordance_matrix_np, "cross_discordance_matrix_nb"),
        ("ts_trace d=15", lambda f: f(W, a),
         accel.ts_trace_np, "ts_trace_nb"),
        ("ts_trace_batch 500x15", lambda f: f(W, batch),
         accel.ts_trace_batch_np, "ts_trace_batch_nb"),
        ("qap_cost d=15", lambda f: f(A15, B15, a),
         accel.qap_cost_np, "qap_cost_nb"),
        ("qap_cost_batch 500x15", lambda f: f(A15, B15, batch),
         accel.qap_cost_batch_np, "qap_cost_batch_nb"),
        ("tsp_length d=15", lambda f: f(coords, a),
         accel.tsp_length_np, "tsp_length_nb"),
    ]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=200)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    print(f"active backend: {accel.BACKEND} (numba available: {accel.HAVE_NUMBA})")
    header = f"{'kernel':<28} {'numpy':>12} {'numba':>12} {'speedup':>9}"
    print(header)
    print("-" * len(header))
    for name, call, np_impl, nb_name in build_cases(rng):
        t_np = timeit(lambda: call(np_impl), args.repeats)
        if accel.HAVE_NUMBA:
            nb_impl = getattr(accel, nb_name)
            t_nb = timeit(lambda: call(nb_impl), args.repeats)
            ratio = t_np / t_nb if t_nb > 0 else float("inf")
            print(f"{name:<28} {t_np * 1e6:>10.1f}us {t_nb * 1e6:>10.1f}us {ratio:>8.1f}x")
        else:
            print(f"{name:<28} {t_np * 1e6:>10.1f}us {'-':>12} {'-':>9}")


if __name__ == "__main__":
    main()
