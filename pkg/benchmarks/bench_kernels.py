"""Compare the compiled and pure-numpy matrix-function kernels.

    python benchmarks/bench_kernels.py [--sizes 4 8 16 32] [--repeat 5]

For every kernel and matrix size the script reports the best-of-``repeat``
time per call for both backends, the speed-up, and the max deviation between
their outputs (which should be at round-off level).
"""
import argparse
import timeit

import numpy as np

from ambient_riemann import _kernels_py
from ambient_riemann.matfun import series_coefficients

try:
    from ambient_riemann import _kernels
except ImportError:  # pragma: no cover
    _kernels = None


def cases(n, rng):
    A = rng.standard_normal((n, n))
    A = 0.5 * A / np.linalg.norm(A, 1)
    ce, cc, cs = (series_coefficients(f, 30) for f in ("exp", "csr", "ssr"))
    return {
        "poly_horner": lambda k: k.poly_horner(A, ce),
        "exp_scaled": lambda k: k.exp_scaled(8.0 * A, ce, 4),
        "csr_ssr_scaled": lambda k: k.csr_ssr_scaled(8.0 * A, cc, cs, 3),
    }


def deviation(a, b):
    if isinstance(a, tuple):
        return max(float(np.abs(x - y).max()) for x, y in zip(a, b))
    return float(np.abs(a - b).max())


def best_time(fn, repeat):
    number = max(1, int(0.05 / max(timeit.timeit(fn, number=1), 1e-7)))
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[4, 8, 16, 32])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if _kernels is None:
        print("compiled extension not built; only the python backend is available")
    rng = np.random.default_rng(args.seed)
    header = f"{'kernel':<16}{'n':>4}{'python [us]':>14}{'cython [us]':>14}{'speedup':>10}{'max dev':>12}"
    print(header)
    print("-" * len(header))
    for n in args.sizes:
        for name, call in cases(n, rng).items():
            tp = best_time(lambda: call(_kernels_py), args.repeat)
            if _kernels is None:
                print(f"{name:<16}{n:>4}{tp * 1e6:>14.2f}{'-':>14}{'-':>10}{'-':>12}")
                continue
            tc = best_time(lambda: call(_kernels), args.repeat)
            dev = deviation(call(_kernels_py), call(_kernels))
            print(f"{name:<16}{n:>4}{tp * 1e6:>14.2f}{tc * 1e6:>14.2f}{tp / tc:>10.2f}{dev:>12.1e}")


if __name__ == "__main__":
    main()
