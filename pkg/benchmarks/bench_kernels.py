#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-numpy fallback.

The two hot paths are the importance-sampling inner loop of the mutual
information estimator and the per-sample SDE integrator.  Run after an
editable install:

    python benchmarks/bench_kernels.py [--inner 10000] [--outer 200]
"""

import argparse
import time

import numpy as np

from nlsechan._kernels import get_backend


def time_mi(kernels, outer, inner, seed=0):
    rng = np.random.default_rng(seed)
    y = np.sqrt(0.5) * (rng.standard_normal(outer) + 1j * rng.standard_normal(outer))
    z = rng.standard_normal((outer, 2, inner))
    t0 = time.perf_counter()
    acc = 0.0
    for i in range(outer):
        lp, _ = kernels.mi_logpout(complex(y[i]), z[i, 0], z[i, 1],
                                   0.5, 1e-3, 1.0, 9e-3)
        acc += lp
    return time.perf_counter() - t0, acc


def time_sde(kernels, n, n_steps, seed=0):
    rng = np.random.default_rng(seed)
    x = np.exp(2j * np.pi * rng.random(n))
    z = rng.standard_normal((n_steps, 2, n))
    t0 = time.perf_counter()
    out = kernels.sde_rotation(x, z, 0.5, 1e-3, 0)
    return time.perf_counter() - t0, complex(out.sum())


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--outer", type=int, default=200,
                    help="outer samples for the MI inner-loop benchmark")
    ap.add_argument("--inner", type=int, default=10_000)
    ap.add_argument("--sde-n", type=int, default=20_000)
    ap.add_argument("--sde-steps", type=int, default=400)
    args = ap.parse_args()

    backends = {}
    backends["python"] = get_backend("python")
    try:
        backends["compiled"] = get_backend("compiled")
    except ImportError:
        print("compiled extension not built; benchmarking fallback only")

    # two MI regimes: small inner batches pay numpy's per-call allocation
    # overhead, large ones are transcendental-bound on either backend
    small_outer, small_inner = 8 * args.outer, args.inner // 8
    results = {}
    for name, mod in backends.items():
        t_small, chk_s = time_mi(mod, small_outer, small_inner)
        t_big, chk_b = time_mi(mod, args.outer, args.inner)
        t_sde, chk_sde = time_sde(mod, args.sde_n, args.sde_steps)
        results[name] = (t_small, t_big, t_sde)
        print(f"{name:>9}:  mi {small_outer}x{small_inner}: {t_small:7.3f} s"
              f"   mi {args.outer}x{args.inner}: {t_big:7.3f} s"
              f"   sde {args.sde_n}x{args.sde_steps}: {t_sde:7.3f} s"
              f"   (checksums {chk_s:.4f}, {chk_b:.4f}, {chk_sde:.4f})")

    if len(results) == 2:
        ratios = [results["python"][i] / results["compiled"][i] for i in range(3)]
        print(f" speedups:  mi small x{ratios[0]:.1f}   mi large x{ratios[1]:.1f}"
              f"   sde x{ratios[2]:.1f}")


if __name__ == "__main__":
    main()
