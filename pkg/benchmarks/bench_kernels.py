"""Timing comparison of the detrending kernels: compiled vs pure numpy.

Runs the order-1 window-residual kernel over a grid of window sizes on a
random-walk profile and reports per-backend wall time plus the speedup.

    python3 benchmarks/bench_kernels.py --length 1048576 --repeats 5
"""
import argparse
import time

import numpy as np

from spreadfract import _kernel_py

try:
    from spreadfract import _kernel_cy
except ImportError:
    _kernel_cy = None


def time_backend(run, profile, sizes, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        for t in sizes:
            run(profile, t)
        best = min(best, time.perf_counter() - start)
    return best


def run_py(profile, t):
    return _kernel_py.fk2_order1(profile, t)


def run_cy(profile, t):
    out = np.empty(profile.shape[0] // t)
    _kernel_cy.fk2_order1_into(profile, t, out)
    return out


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--length", type=int, default=1 << 20,
                        help="profile length (default 2^20)")
    parser.add_argument("--repeats", type=int, default=5,
                        help="repetitions; the best time is reported")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    profile = np.cumsum(rng.standard_normal(args.length))
    raw = np.exp(np.linspace(np.log(16), np.log(args.length // 4), 20))
    sizes = np.unique(np.round(raw).astype(np.int64)).tolist()

    print(f"profile length {args.length}, {len(sizes)} window sizes, "
          f"best of {args.repeats}")
    t_py = time_backend(run_py, profile, sizes, args.repeats)
    print(f"  numpy kernel:    {t_py * 1e3:9.2f} ms")
    if _kernel_cy is None:
        print("  compiled kernel: not installed")
        return
    t_cy = time_backend(run_cy, profile, sizes, args.repeats)
    print(f"  compiled kernel: {t_cy * 1e3:9.2f} ms")
    print(f"  speedup:         {t_py / t_cy:9.2f}x")
    check_py = run_py(profile, sizes[0])
    check_cy = run_cy(profile, sizes[0])
    drift = float(np.max(np.abs(check_py - check_cy)))
    print(f"  max |py - cy| at t = {sizes[0]}: {drift:.3e}")


if __name__ == "__main__":
    main()
