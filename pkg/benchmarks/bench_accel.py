"""Compare the numba and pure-numpy versions of the hot kernels.

Run ``python3 benchmarks/bench_accel.py``.  Each kernel is timed on the
same inputs under both backends (best of ``--repeat`` runs, after one
warm-up call so JIT compilation is excluded) and the largest relative
difference between the two results is printed.  ``--end-to-end`` also
times a full spin-branch MSD run in a subprocess per backend, selected
through ``POLARON_NUMBA``.
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from polaron import _accel


def _cases(size):
    rng = np.random.default_rng(12345)
    n = size
    nodes = np.linspace(0.0, 10.0, n)
    values = np.sqrt(nodes) * np.exp(-nodes / 5.0)
    t = np.logspace(-2, 3, 400)
    g = np.linspace(0.0, 1.0, n)
    w = [rng.standard_normal(n) for _ in range(4)]
    z = rng.uniform(-0.9, 0.9, 4000) + 0j
    x = -np.linspace(0.0, 50.0, 4000)
    return {
        "panel_sums": (w[0], w[1], w[2], w[3], g),
        "filon_cos": (nodes, values, t),
        "cosine_sum": (nodes, values, t),
        "series_2f1": (0.5, 1.5, 2.5, z, 1e-14, 20000),
        "series_1f2": (0.75, 0.5, 1.75, x, 1e-12, 2000),
    }


def _first(result):
    return result[0] if isinstance(result, tuple) else result


def _best_time(fn, args, repeat):
    fn(*args)
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - start)
    return best, out


def bench_kernels(size, repeat):
    if not _accel.NUMBA_KERNELS:
        print("numba unavailable (or POLARON_NUMBA=0): only the numpy path can run")
    print(f"{'kernel':<12} {'numpy [s]':>11} {'numba [s]':>11} {'speedup':>8} {'max rel diff':>13}")
    for name, args in _cases(size).items():
        t_np, out_np = _best_time(_accel.NUMPY_KERNELS[name], args, repeat)
        if name in _accel.NUMBA_KERNELS:
            t_nb, out_nb = _best_time(_accel.NUMBA_KERNELS[name], args, repeat)
            a, b = np.asarray(_first(out_np)), np.asarray(_first(out_nb))
            diff = float(np.max(np.abs(a - b) / np.maximum(np.abs(a), 1e-300)))
            print(f"{name:<12} {t_np:11.4g} {t_nb:11.4g} {t_np / t_nb:8.1f} {diff:13.3g}")
        else:
            print(f"{name:<12} {t_np:11.4g} {'-':>11} {'-':>8} {'-':>13}")


_E2E = """
import time
from polaron.params import PhysicalConfig, prepare
from polaron.kernels import build_kernels
from polaron.msd import default_grid, msd_numeric
from polaron import _accel
_, _, dim = prepare(PhysicalConfig(tau_plus_override=1.0))
k = build_kernels("spin", dim, T=0.0)
msd_numeric(default_grid(1e-2, 1e1, 50), "spin", k, check_convergence=False)
start = time.perf_counter()
msd_numeric(default_grid(), "spin", k)
print(_accel.BACKEND, time.perf_counter() - start)
"""


def bench_end_to_end():
    print("\nspin-branch MSD, 400 points on [1e-2, 1e3], refinement gate on")
    for flag in ("1", "0"):
        env = dict(os.environ, POLARON_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", _E2E], env=env, capture_output=True,
                             text=True, check=True)
        backend, seconds = out.stdout.split()
        print(f"  {backend:<6} {float(seconds):8.2f} s")


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--size", type=int, default=20000, help="array length of the inputs")
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--end-to-end", action="store_true")
    args = parser.parse_args(argv)
    print(f"active backend: {_accel.BACKEND}")
    bench_kernels(args.size, args.repeat)
    if args.end_to_end:
        bench_end_to_end()


if __name__ == "__main__":
    main()
