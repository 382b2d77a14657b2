"""Time the compiled trial kernel against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--runs 2000] [--repeat 5]
"""

import argparse
import time

import numpy as np

from qlidar import ScenarioConfig, build_bin_distributions, streams
from qlidar import kernels


def best_time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    good, bad = build_bin_distributions(ScenarioConfig.from_preset("hsln"))
    print(f"selected backend: {kernels.BACKEND}")
    if kernels.compiled_simulate_counts is None:
        print("compiled extension not built; only the fallback is timed")
    print(f"{'n_c':>5} {'python ms':>10} {'cython ms':>10} {'speedup':>8}")
    for n_c in (1, 8, 32, 128):
        key = streams.cell_key(0, 5, n_c)
        call = lambda f: f(good.cdf, bad.cdf, key, args.runs, n_c, 5)
        t_py = best_time(lambda: call(kernels.pure_simulate_counts), args.repeat)
        if kernels.compiled_simulate_counts is None:
            print(f"{n_c:>5} {t_py * 1e3:>10.2f} {'-':>10} {'-':>8}")
            continue
        t_c = best_time(lambda: call(kernels.compiled_simulate_counts), args.repeat)
        same = np.array_equal(call(kernels.pure_simulate_counts), call(kernels.compiled_simulate_counts))
        print(f"{n_c:>5} {t_py * 1e3:>10.2f} {t_c * 1e3:>10.2f} {t_py / t_c:>7.1f}x{'' if same else '  MISMATCH'}")


if __name__ == "__main__":
    main()
