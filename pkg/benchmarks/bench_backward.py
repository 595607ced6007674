#!/usr/bin/env python3
"""Benchmark: compiled backward-process kernel vs pure-Python fallback.

Runs the same workloads through both engines, checks the results agree
bit-for-bit, and reports wall times and speedups.
"""

import argparse
import time

import numpy as np

from dynsir import engine, generators
from dynsir.epidemic import Dist, backward_times, sample_marks
from dynsir.graphs import union_graph
from dynsir.rng import derive_seed


def bench_finite(n, gamma, horizon, rho, radius, n_roots, seed):
    g = generators.gen_dynamic_er(generators.DerConfig(n, gamma, horizon), seed)
    u = union_graph(g)
    marks = sample_marks(u, rho, Dist.exponential(2), Dist.exponential(3), seed)
    rng = np.random.default_rng(seed)
    roots = np.sort(rng.choice(n, size=min(n_roots, n), replace=False))
    out = {}
    for impl in ("c", "py") if engine.HAVE_COMPILED else ("py",):
        t0 = time.perf_counter()
        times = backward_times(u, marks, roots, radius, impl=impl)
        out[impl] = (time.perf_counter() - t0, times)
    return out


def bench_limit(gamma, horizon, rho, depth, runs, seed):
    seeds = np.array([derive_seed(seed, i) for i in range(runs)], dtype=np.uint64)
    lam = gamma * (1 + horizon)
    out = {}
    for impl in ("c", "py") if engine.HAVE_COMPILED else ("py",):
        t0 = time.perf_counter()
        t, r = engine.run_der_limit(
            seeds, depth, lam, horizon, rho,
            Dist.exponential(2), Dist.exponential(3), 10**8, impl=impl,
        )
        out[impl] = (time.perf_counter() - t0, t)
    return out


def report(name, out):
    if "c" not in out:
        print(f"{name}: python {out['py'][0]:.3f}s (compiled engine not built)")
        return
    tc, rc = out["c"]
    tp, rp = out["py"]
    same = np.array_equal(rc, rp) or np.allclose(rc, rp, equal_nan=True)
    print(
        f"{name}: compiled {tc:.3f}s / python {tp:.3f}s "
        f"-> {tp / tc:.1f}x speedup; identical={same}"
    )


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    print(f"compiled engine available: {engine.HAVE_COMPILED}")
    report(
        "finite graph  (DER n=1500 T=1, radius 4, 150 roots)",
        bench_finite(1500, 3.0, 1.0, 0.2, 4, 150, args.seed),
    )
    report(
        "finite graph  (DER n=1500 T=1, unbounded radius, 150 roots)",
        bench_finite(1500, 3.0, 1.0, 0.2, None, 150, args.seed),
    )
    report(
        "lazy DER limit (gamma=3 T=1 depth 5, 3000 trees)",
        bench_limit(3.0, 1.0, 0.3, 5, 3000, args.seed),
    )
    report(
        "lazy DER limit (gamma=3 T=5 depth 5, 1000 trees)",
        bench_limit(3.0, 5.0, 0.5, 5, 1000, args.seed),
    )


if __name__ == "__main__":
    main()
