"""Compare the numba and pure-numpy outcome kernels on identical inputs.

    python3 benchmarks/bench_kernels.py --rows 64 --draws 100000 --repeat 5
"""
import argparse
import time

import numpy as np

from nlhvlab import kernels
from nlhvlab._accel import HAVE_NUMBA


def make_inputs(rows, draws, seed):
    rng = np.random.default_rng(seed)
    ua = rng.uniform(-1, 1, (rows, draws))
    vb = rng.uniform(-1, 1, (rows, draws))
    ab = rng.uniform(-1, 1, rows)
    lam = rng.random((rows, draws))
    return ua, vb, ab, lam


def best_of(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--rows", type=int, default=64)
    p.add_argument("--draws", type=int, default=100_000)
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    data = make_inputs(args.rows, args.draws, args.seed)
    n = args.rows * args.draws
    t_np, ref = best_of(kernels.outcome_counts_numpy, data, args.repeat)
    print(f"numpy : {t_np:8.4f} s  {n / t_np / 1e6:8.1f} Mdraws/s")
    if not HAVE_NUMBA:
        print("numba : unavailable (disabled or not installed)")
        return 0
    kernels.outcome_counts(*(x[:1, :10] for x in data[:2]), data[2][:1], data[3][:1, :10])  # compile
    t_nb, out = best_of(kernels.outcome_counts, data, args.repeat)
    same = all(np.array_equal(x, y) for x, y in zip(ref, out))
    print(f"numba : {t_nb:8.4f} s  {n / t_nb / 1e6:8.1f} Mdraws/s")
    print(f"speedup {t_np / t_nb:.1f}x, identical counts: {same}")
    return 0 if same else 1


if __name__ == "__main__":
    raise SystemExit(main())
