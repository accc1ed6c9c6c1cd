"""Time the numba kernels against their numpy twins.

Workloads mirror the real call sites: one PMMH likelihood (7 replicates
x 251 steps x 100 particles), one swarm step (100 bundles x 100
particles) and the state propagation on the same batch.

    python benchmarks/bench_kernels.py [--repeats 20]
"""
import argparse
import time

import numpy as np

from smcforecast.kernels import _numba, _numpy


def best_of(fn, repeats):
    fn()  # warm-up, includes JIT compilation
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def workloads(rng):
    K, T, N = 7, 251, 100
    y = rng.standard_normal(T)
    full = lambda v: np.full((K, N), v)
    pm = (y, full(-0.2), full(0.97), full(0.02), full(-0.6),
          rng.standard_normal((T, K, N)), rng.random((T, K, N)), 0.5)

    B = 100
    x = rng.standard_normal((B, N))
    lw = rng.standard_normal((B, N))
    inc = rng.standard_normal((B, N))
    u = rng.random((B, N))
    b = lambda v: np.full((B, N), v)
    prop = (b(-0.2), b(0.97), b(0.02), b(-0.6), x, 0.8, rng.standard_normal((B, N)))
    return {
        "pmmh likelihood (7x251x100)": lambda m: m.sv_bootstrap_loglik(*pm),
        "reweight+resample (100x100)": lambda m: m.reweight_resample(lw, inc, x, u, 1.0),
        "propagate (100x100)": lambda m: m.sv_propagate(*prop),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    print(f"{'kernel':32s} {'numpy ms':>10s} {'numba ms':>10s} {'speedup':>8s}")
    for name, fn in workloads(np.random.default_rng(args.seed)).items():
        t_np = best_of(lambda: fn(_numpy), args.repeats)
        t_nb = best_of(lambda: fn(_numba), args.repeats)
        print(f"{name:32s} {1e3 * t_np:10.3f} {1e3 * t_nb:10.3f} {t_np / t_nb:8.1f}x")


if __name__ == "__main__":
    main()
