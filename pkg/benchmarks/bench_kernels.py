"""Time the numba kernels against their pure-numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Each case is run once untimed (JIT warm-up), then ``--repeat`` times; the
best wall time is reported. Outputs of the two paths are checked for equality.
"""

import argparse
import json
import sys
import time

import numpy as np

from ordersup import kernels
from ordersup.permutation import all_permutations


def best_time(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def random_perms(rng, m, n):
    return np.argsort(rng.random((m, n)), axis=1).astype(np.int64)


def cases(rng):
    pool8 = all_permutations(8)
    batch = random_perms(rng, 100_000, 12)
    pool9 = random_perms(rng, 10_000, 9)
    chosen9 = random_perms(rng, 100, 9)
    return [
        ("greedy_select N=8 pool=40320 size=100",
         lambda: kernels.greedy_select_nb(pool8, np.int64(0), np.int64(100)),
         lambda: kernels.greedy_select_np(pool8, 0, 100)),
        ("distances_to_set N=9 pool=10000 chosen=100",
         lambda: kernels.distances_to_set_nb(pool9, chosen9),
         lambda: kernels.distances_to_set_np(pool9, chosen9)),
        ("inversion_counts 100000 x N=12",
         lambda: kernels.inversion_counts_nb(batch),
         lambda: kernels.inversion_counts_np(batch)),
        ("lehmer_codes 100000 x N=12",
         lambda: kernels.lehmer_codes_nb(batch),
         lambda: kernels.lehmer_codes_np(batch)),
    ]


def same(a, b):
    if isinstance(a, tuple):
        return all(np.array_equal(x, y) for x, y in zip(a, b))
    return np.array_equal(a, b)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--json", default=None, help="also write results here")
    args = ap.parse_args(argv)
    if not kernels.HAVE_NUMBA:
        print("numba is not installed; nothing to compare", file=sys.stderr)
        return 1

    rows = []
    print(f"{'case':46s} {'numba s':>10s} {'numpy s':>10s} {'speedup':>8s}")
    for name, nb, npy in cases(np.random.default_rng(args.seed)):
        if not same(nb(), npy()):
            print(f"{name}: outputs differ", file=sys.stderr)
            return 2
        t_nb = best_time(nb, args.repeat)
        t_np = best_time(npy, args.repeat)
        rows.append({"case": name, "numba_s": t_nb, "numpy_s": t_np})
        print(f"{name:46s} {t_nb:10.4f} {t_np:10.4f} {t_np / t_nb:7.1f}x")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
