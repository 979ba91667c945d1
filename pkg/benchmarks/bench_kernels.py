"""Time the numpy and numba kernels side by side, plus one end-to-end cap experiment.

    python benchmarks/bench_kernels.py [--n 100000] [--repeat 20]

The end-to-end run spawns a fresh interpreter for each backend so that
``HIGHCONC_DISABLE_JIT`` takes effect.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from highconc import _kernels

E2E = ("import time; from highconc.montecarlo import ExperimentConfig, run_cap_experiment;"
       "cfg = ExperimentConfig(n=700, M=1000, seed=1);"
       "run_cap_experiment(ExperimentConfig(n=50, M=5, seed=1));"
       "t = time.perf_counter(); run_cap_experiment(cfg); print(time.perf_counter() - t)")


def _best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def kernel_table(n, repeat):
    rng = np.random.default_rng(0)
    xk = np.linspace(0.0, 1.0, 4097)
    yk = np.sin(3 * xk)
    dk = _kernels.pchip_slopes(xk, yk)
    xq = rng.uniform(0, 1, n)
    w = rng.uniform(0, 0.1, n)
    z = rng.standard_normal((n, 2))
    pole = np.array([0.0, 0.0, 1.0])
    frame = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    x = _kernels.tangent_rows_numpy(w, z, pole, frame)
    cases = [
        ("hermite_eval", _kernels.hermite_eval_numpy, _kernels.hermite_eval_numba, (xk, yk, dk, xq)),
        ("tangent_rows", _kernels.tangent_rows_numpy, _kernels.tangent_rows_numba, (w, z, pole, frame)),
        ("projection_summary", _kernels.projection_summary_numpy,
         _kernels.projection_summary_numba, (x, pole)),
    ]
    rows = []
    for name, f_np, f_nb, args in cases:
        t_np = _best(lambda: f_np(*args), repeat)
        t_nb = float("nan")
        if f_nb is not None:
            f_nb(*args)  # compile outside the timing
            t_nb = _best(lambda: f_nb(*args), repeat)
        rows.append((name, t_np, t_nb))
    return rows


def end_to_end(disable):
    env = dict(os.environ, HIGHCONC_DISABLE_JIT="1" if disable else "0")
    out = subprocess.run([sys.executable, "-c", E2E], env=env, capture_output=True,
                         text=True, check=True)
    return float(out.stdout.strip())


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=100000)
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--skip-e2e", action="store_true")
    args = ap.parse_args(argv)
    print("%-20s %12s %12s %8s" % ("kernel (n=%d)" % args.n, "numpy ms", "numba ms", "speedup"))
    for name, t_np, t_nb in kernel_table(args.n, args.repeat):
        print("%-20s %12.3f %12.3f %8.2f" % (name, 1e3 * t_np, 1e3 * t_nb, t_np / t_nb))
    if not args.skip_e2e:
        t_np, t_nb = end_to_end(True), end_to_end(False)
        print("%-20s %12.3f %12.3f %8.2f" % ("cap experiment s", t_np, t_nb, t_np / t_nb))


if __name__ == "__main__":
    main()
