"""Compare the compiled and pure-numpy symmetric-function kernels.

Usage::

    python3 benchmarks/bench_kernels.py [--m 20000] [--repeat 5]

Prints best-of-``repeat`` wall times per dimension for the full tables
(S, single-omit and pair-omit) and checks both backends agree.
"""
import argparse
import time

import numpy as np

from quotient_transport import _kernels_py

try:
    from quotient_transport import _kernels
except ImportError:  # extension not built
    _kernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--m", type=int, default=20000, help="spectra per batch")
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--dims", type=int, nargs="+", default=[2, 4, 8])
    args = p.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"{'n':>3} {'numpy [s]':>11} {'cython [s]':>11} {'speedup':>8} {'max |diff|':>11}")
    for n in args.dims:
        lam = rng.uniform(0.1, 10.0, size=(args.m, n))
        t_py = best_of(lambda: _kernels_py.sym_tables(lam, True), args.repeat)
        if _kernels is None:
            print(f"{n:>3} {t_py:>11.4f} {'n/a':>11} {'n/a':>8} {'n/a':>11}")
            continue
        t_cy = best_of(lambda: _kernels.sym_tables(lam, True), args.repeat)
        a = _kernels_py.sym_tables(lam, True)
        b = _kernels.sym_tables(lam, True)
        diff = max(float(np.max(np.abs(x - y))) for x, y in zip(a, b))
        print(f"{n:>3} {t_py:>11.4f} {t_cy:>11.4f} {t_py / t_cy:>8.1f} {diff:>11.2e}")


if __name__ == "__main__":
    main()
