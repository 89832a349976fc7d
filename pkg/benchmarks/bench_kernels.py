"""Time the compiled and pure-Python walk kernels on the same workloads.

    python3 benchmarks/bench_kernels.py [--walkers 2000] [--repeat 3]

Both backends must return identical arrays; the script checks this before
reporting timings.
"""

import argparse
import time

import numpy as np

from frogcert import kernels
from frogcert.rng import derive_key


def walk_case(mod, n, d=2, R=12, K=24, T=10_000):
    starts = np.zeros(n, dtype=np.uint64)
    streams = np.array([derive_key(1, 0, 0, i) for i in range(n)], dtype=np.uint64)
    out = mod.walk_batch(d, False, starts, streams, R, K, T, mod.KeySet([0]))
    return out


def island_case(mod, n, d=2, R=12, K=24, T=10_000, walkers=64):
    counts = np.full(n, walkers, dtype=np.int64)
    reps = np.arange(n, dtype=np.uint64)
    lam = d**-0.5
    lam_pow = lam ** np.arange(-R, R + 1, dtype=float)
    return mod.island_batch(d, False, counts, 3, reps, 0, R, K, T, lam_pow, lam,
                            2**64 - 1)


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def same(a, b):
    if isinstance(a, dict):
        return all(np.array_equal(a[k], b[k]) for k in a)
    return all(np.array_equal(x, y) for x, y in zip(a, b))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--walkers", type=int, default=2000)
    ap.add_argument("--islands", type=int, default=50)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    names = kernels.available_backends()
    cases = {
        "walk_batch": lambda mod: walk_case(mod, args.walkers),
        "island_batch": lambda mod: island_case(mod, args.islands),
    }
    print(f"{'kernel':<14}{'backend':<10}{'seconds':>10}{'speedup':>10}")
    for name, case in cases.items():
        results = {}
        for b in names:
            mod = kernels.backend(b)
            results[b] = best_of(lambda: case(mod), args.repeat)
        ref = results["python"][0]
        for b, (t, _) in results.items():
            print(f"{name:<14}{b:<10}{t:>10.4f}{ref / t:>9.1f}x")
        if len(results) > 1:
            outs = [o for _, o in results.values()]
            if not same(outs[0], outs[1]):
                raise SystemExit(f"{name}: backends disagree")
    if "cython" not in names:
        print("compiled extension not built; only the fallback was timed")


if __name__ == "__main__":
    main()
