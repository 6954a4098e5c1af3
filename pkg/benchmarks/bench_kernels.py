"""Compare the compiled and numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat 200]

Times each kernel on a few sizes, then runs one SSRGD driver end to end
under each backend in a fresh interpreter (the backend is chosen at import).
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from proxvr import kernels

DRIVER = """
import time, numpy as np, proxvr
from proxvr import make_quadratic_l1, default_params, run_ssrgd
p = make_quadratic_l1(5000, 100, l1_weight=0.01, seed=0)
p.phi_star = 0.0
prm = default_params('T2a', p, 1e-2, b=64)
prm.max_iters = 4000
t0 = time.perf_counter()
run_ssrgd(p, prm, np.zeros(100))
print(proxvr.KERNEL_BACKEND, time.perf_counter() - t0)
"""


def time_call(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat)) * 1e6


def kernel_table(repeat):
    cy, py = kernels.get_backend("cython"), kernels.get_backend("python")
    rng = np.random.default_rng(0)
    rows = []
    for n, d, b in ((1000, 20, 16), (5000, 100, 64), (20000, 200, 256)):
        A, y = rng.normal(size=(n, d)), rng.normal(size=n)
        x, z = rng.normal(size=d), rng.normal(size=d)
        idx = rng.integers(0, n, size=b)
        lo, hi = -np.ones(d), np.ones(d)
        cases = {
            "glm_grad": lambda k: k.glm_grad(A, y, x, idx, kernels.LOSS_SQUARE),
            "glm_grad_diff": lambda k: k.glm_grad_diff(A, y, x, z, idx, kernels.LOSS_ROBUST),
            "soft_threshold": lambda k: k.soft_threshold(x, 0.1),
            "clip": lambda k: k.clip(x, lo, hi),
            "project_ball": lambda k: k.project_ball(x, 1.0),
        }
        for name, call in cases.items():
            t_cy = time_call(lambda: call(cy), repeat)
            t_py = time_call(lambda: call(py), repeat)
            rows.append((name, f"{n}x{d} b={b}", t_cy, t_py))
    return rows


def driver_times():
    out = {}
    for flag in ("", "1"):
        env = dict(os.environ)
        env.pop("PROXVR_PURE_PYTHON", None)
        if flag:
            env["PROXVR_PURE_PYTHON"] = flag
        res = subprocess.run([sys.executable, "-c", DRIVER], env=env, capture_output=True,
                             text=True, check=True)
        backend, secs = res.stdout.split()
        out[backend] = float(secs)
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=200)
    args = ap.parse_args()
    print(f"{'kernel':<16}{'shape':<22}{'cython us':>12}{'python us':>12}{'speedup':>10}")
    for name, shape, t_cy, t_py in kernel_table(args.repeat):
        print(f"{name:<16}{shape:<22}{t_cy:>12.2f}{t_py:>12.2f}{t_py / t_cy:>10.2f}")
    times = driver_times()
    print(f"\nssrgd 4000 iterations, n=5000 d=100 b=64: cython {times['cython']:.2f}s, "
          f"python {times['python']:.2f}s ({times['python'] / times['cython']:.2f}x)")


if __name__ == "__main__":
    main()
