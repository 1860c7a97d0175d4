#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

Run from the repo after an editable install:

    python benchmarks/bench_kernels.py

Times subset counting, the all-pairs correlation pass, exact state
enumeration and Gibbs sweeps on representative sizes, and prints a speedup
table.  The Gibbs rows also double as a cross-backend equivalence check:
both implementations consume the same uniform stream and must produce
identical samples.
"""
import time

import numpy as np

from mrfstruct import _kernels_py
from mrfstruct import model as M
from mrfstruct import oracle

try:
    from mrfstruct import _kernels
except ImportError:
    _kernels = None


def timeit(fn, repeat=3):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench(name, py_fn, cy_fn, check=None):
    t_py, out_py = timeit(py_fn)
    if cy_fn is None:
        print(f"{name:<28} python {t_py * 1e3:8.2f} ms   (no extension built)")
        return
    t_cy, out_cy = timeit(cy_fn)
    status = ""
    if check is not None:
        status = "  OK" if check(out_py, out_cy) else "  MISMATCH"
    print(f"{name:<28} python {t_py * 1e3:8.2f} ms   cython {t_cy * 1e3:8.2f} ms   "
          f"x{t_py / t_cy:6.1f}{status}")


def main():
    rng = np.random.default_rng(7)
    print(f"extension available: {_kernels is not None}\n")

    data = rng.integers(0, 2, size=(200_000, 16)).astype(np.uint8)
    cols = np.array([0, 3, 7, 12], dtype=np.int64)
    bench("count_subset k=2e5 m=4",
          lambda: _kernels_py.count_subset(data, cols, 2),
          (lambda: _kernels.count_subset(data, cols, 2)) if _kernels else None,
          check=lambda a, b: np.array_equal(a, b))

    data32 = rng.integers(0, 2, size=(100_000, 32)).astype(np.uint8)
    bench("pair_counts k=1e5 n=32",
          lambda: _kernels_py.pair_counts(data32, 2),
          (lambda: _kernels.pair_counts(data32, 2)) if _kernels else None,
          check=lambda a, b: np.array_equal(a, b))

    mdl = M.random_ising(18, 3, seed=5)
    cf, cp, tf, tp = oracle.flatten_potentials(mdl)
    bench("enum_log_weights 2^18",
          lambda: _kernels_py.enum_log_weights(18, 2, cf, cp, tf, tp),
          (lambda: _kernels.enum_log_weights(18, 2, cf, cp, tf, tp)) if _kernels else None,
          check=lambda a, b: np.allclose(a, b, atol=1e-12))

    gm = M.random_ising(24, 3, seed=11)
    gcf, gcp, gtf, gtp = oracle.flatten_potentials(gm)
    sp, si = oracle.site_incidence(gm)
    sweeps = 400
    u = np.random.default_rng(3).random((sweeps, gm.n))
    out_py_arr = np.empty((sweeps // 10, gm.n), dtype=np.uint8)
    out_cy_arr = np.empty((sweeps // 10, gm.n), dtype=np.uint8)

    def run_gibbs(impl, out):
        state = np.zeros(gm.n, dtype=np.uint8)
        impl.gibbs_sweeps(state, u, 2, sp, si, gcf, gcp, gtf, gtp, 10, out, 0)
        return out.copy()

    bench(f"gibbs_sweeps n={gm.n} s={sweeps}",
          lambda: run_gibbs(_kernels_py, out_py_arr),
          (lambda: run_gibbs(_kernels, out_cy_arr)) if _kernels else None,
          check=lambda a, b: np.array_equal(a, b))


if __name__ == "__main__":
    main()
