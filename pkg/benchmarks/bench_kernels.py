"""Time the compiled and pure-numpy phase retrieval loops on identical inputs.

    python3 benchmarks/bench_kernels.py --d 50 --steps 20000
"""
import argparse
import time

import numpy as np

from proxguide._kernels import compiled, python
from proxguide.core import RngStream, unit_sphere
from proxguide.inner import alpha_schedule
from proxguide.problems import phase_retrieval_oracle


def _inputs(d, steps, seed):
    rng = RngStream(seed)
    oracle = phase_retrieval_oracle(d, unit_sphere(d, rng.split(0)))
    batch = oracle.sample(rng.split(1), steps)
    y0 = unit_sphere(d, rng.split(2))
    gamma = 2.0**-6
    alphas = alpha_schedule(1.0 / (2 * gamma), gamma, np.arange(steps))
    return oracle, batch, y0, gamma, alphas


def bench(module, d, steps, repeat, seed=0):
    oracle, batch, y0, gamma, alphas = _inputs(d, steps, seed)
    best = np.inf
    for _ in range(repeat):
        y, acc = y0.copy(), y0.copy()
        t0 = time.perf_counter()
        module.pssm_phase(y, y0, acc, batch.A, batch.target, alphas, 1.0 / gamma,
                          oracle.feasible_set.radius, 2.0)
        best = min(best, time.perf_counter() - t0)
    return best, acc


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--d", type=int, default=50)
    ap.add_argument("--steps", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    t_py, acc_py = bench(python, args.d, args.steps, args.repeat)
    print(f"python   {t_py * 1e9 / args.steps:10.1f} ns/step")
    if compiled is None:
        print("cython   (extension not built)")
        return
    t_c, acc_c = bench(compiled, args.d, args.steps, args.repeat)
    err = np.max(np.abs(acc_c - acc_py)) / max(1.0, np.max(np.abs(acc_py)))
    print(f"cython   {t_c * 1e9 / args.steps:10.1f} ns/step")
    print(f"speedup  {t_py / t_c:10.1f}x   max rel. difference {err:.1e}")


if __name__ == "__main__":
    main()
