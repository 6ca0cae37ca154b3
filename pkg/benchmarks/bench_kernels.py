"""Compare the compiled and numpy kernels on typical workloads.

Run with ``python3 benchmarks/bench_kernels.py``. Each kernel is timed on
both backends with identical inputs; the outputs are cross-checked before
timing. An end-to-end orbit search is also timed in a subprocess per
backend, since the backend is fixed at import.
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import time
from fractions import Fraction

import numpy as np

from systolic._kernels import backends
from systolic.generators import random_poly, rng_from_seed
from systolic.hamcore import hst

END_TO_END = (
    "import time; from fractions import Fraction;"
    "from systolic.generators import random_poly, rng_from_seed;"
    "from systolic.hamcore import hst; from systolic.orbits import systole;"
    "H = hst(2) + random_poly(2, rng_from_seed(1), degrees=(4, 6), sup_bound=Fraction(1, 20));"
    "t = time.perf_counter(); systole(H, seeds=8, seed=0); print(time.perf_counter() - t)"
)


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def workloads(tab, x0, X):
    args = tab.args
    return {
        "table_eval (4096 pts)": lambda k: k.table_eval(*args, X),
        "table_grad (4096 pts)": lambda k: k.table_grad(*args, X),
        "table_hess (256 pts)": lambda k: k.table_hess(*args, X[:256]),
        "flow_adaptive + monodromy": lambda k: k.flow_adaptive(*args, x0, 3.2, 1e-12, 1e-12, 0.0, True, False,
                                                             100000),
        "flow_fixed (64 pts, 200 steps)": lambda k: k.flow_fixed(*args, X[:64], 0.01, 200),
        "flow_fixed_path (1024 steps)": lambda k: k.flow_fixed_path(*args, x0, 0.003, 1024, 1),
    }


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--skip-end-to-end", action="store_true")
    args = ap.parse_args(argv)

    found = backends()
    if "cython" not in found:
        print("compiled kernel not built; run `python3 setup.py build_ext --inplace` first")
        return 1
    H = hst(2) + random_poly(2, rng_from_seed(1), degrees=(4, 6), sup_bound=Fraction(1, 20))
    tab = H.table()
    rng = np.random.default_rng(0)
    X = rng.normal(size=(4096, 4))
    x0 = np.array([0.7, 0.1, -0.2, 0.6])

    print(f"{'kernel':34s} {'python [ms]':>12s} {'cython [ms]':>12s} {'speed-up':>9s}")
    for name, fn in workloads(tab, x0, X).items():
        py = fn(found["python"])
        cy = fn(found["cython"])
        a = py[2] if isinstance(py, tuple) else py
        b = cy[2] if isinstance(cy, tuple) else cy
        if not np.allclose(a, b, atol=1e-9):
            print(f"{name}: backends disagree")
            return 1
        tp = best_of(lambda: fn(found["python"]), args.repeat)
        tc = best_of(lambda: fn(found["cython"]), args.repeat)
        print(f"{name:34s} {1e3 * tp:12.2f} {1e3 * tc:12.2f} {tp / tc:9.1f}")

    if not args.skip_end_to_end:
        res = {}
        for label, flag in (("python", "1"), ("cython", "0")):
            env = dict(os.environ, SYSTOLIC_PURE_PYTHON=flag)
            out = subprocess.run([sys.executable, "-c", END_TO_END], env=env, capture_output=True, text=True,
                                 check=True)
            res[label] = float(out.stdout.strip().splitlines()[-1])
        print(f"{'systole search (8 seeds)':34s} {1e3 * res['python']:12.2f} {1e3 * res['cython']:12.2f} "
              f"{res['python'] / res['cython']:9.1f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
