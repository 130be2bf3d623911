"""Benchmark the sequential sampling core: numba-compiled scalar loops
versus the vectorized numpy fallback, on identical uniform streams.

Usage: python benchmarks/bench_sampler.py [--rank 64] [--replicas 200]

The two paths consume randomness identically, so besides the timing this
also verifies that the sampled configurations agree bit for bit.
"""
import argparse
import time

import numpy as np

from palmdpp import Domain, FockGaussian, RngStream, build_kernel
from palmdpp._kernels import _sample_replica_loop, sample_replica_numpy
from palmdpp.kernelspace import weight_core_params
from palmdpp.sampler import _uniform_budget, envelope_data

try:
    from numba import njit
    jitted = njit(cache=True, nogil=True)(_sample_replica_loop)
except ImportError:
    jitted = None


def run(core, model, env, args_w, replicas, budget):
    out_re = np.empty(model.rank)
    out_im = np.empty(model.rank)
    points = np.empty((replicas, model.rank), dtype=complex)
    t0 = time.perf_counter()
    for rep in range(replicas):
        u = RngStream(7, rep).generator().random(budget)
        B = model.coeffs.astype(np.complex128, copy=True)
        status = core(B, model.norm_ratios, model.inv_c0, *args_w,
                      env.edges, env.values, env.cum_mass, u, out_re, out_im)
        assert status > 0, status
        points[rep] = out_re + 1j * out_im
    return time.perf_counter() - t0, points


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--rank", type=int, default=64)
    ap.add_argument("--replicas", type=int, default=200)
    args = ap.parse_args()

    model = build_kernel(Domain.PLANE, FockGaussian(), args.rank)
    env = envelope_data(model)
    wcode, wparam, tr, tlw = weight_core_params(model.weight)
    args_w = (wcode, wparam, tr, tlw)
    budget = _uniform_budget(model, env)

    if jitted is not None:
        run(jitted, model, env, args_w, 2, budget)  # compile warmup
        t_numba, pts_numba = run(jitted, model, env, args_w,
                                 args.replicas, budget)
        print(f"numba scalar core : {t_numba:8.3f}s "
              f"({1e3 * t_numba / args.replicas:7.3f} ms/replica)")
    t_numpy, pts_numpy = run(sample_replica_numpy, model, env, args_w,
                             args.replicas, budget)
    print(f"numpy batched core: {t_numpy:8.3f}s "
          f"({1e3 * t_numpy / args.replicas:7.3f} ms/replica)")
    if jitted is not None:
        print(f"speedup: {t_numpy / t_numba:.2f}x")
        assert np.array_equal(pts_numba, pts_numpy), "paths diverged"
        print("outputs bit-identical across paths")


if __name__ == "__main__":
    main()
