#!/usr/bin/env python3
"""Benchmark the compiled kernel core against the pure-Python fallback.

Run from the repository root:

    python3 benchmarks/bench_kernels.py

Both backends are imported directly, so the comparison works regardless of
which one the package selected at import time.
"""

import time

import numpy as np

from dynlab._kernels import _core, pyfallback

CHEB = np.array([-2.0, 0.0, 1.0], dtype=complex)
DENDRITE = np.array([1j, 0.0, 1.0], dtype=complex)


def timeit(fn, *args, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def workloads():
    rng = np.random.default_rng(0)
    zs = rng.uniform(-2.5, 2.5, 200_000) + 1j * rng.uniform(-2.5, 2.5,
                                                            200_000)
    theta = np.linspace(0, 2 * np.pi, 4096)
    loop = 2.0 * np.exp(1j * theta) + 0.1
    target = np.exp(1.5 + 0.3j)
    yield ("horner2_many 200k", "horner2_many", (DENDRITE, zs))
    yield ("green_many 200k d60", "green_many", (CHEB, zs, 60, 6.0))
    yield ("orbit_cocycle 5k x 1000", "orbit_cocycle_batch", (zs[:5000],))
    yield ("lift_path 4096", "lift_path", (CHEB, loop, 1.45 + 0.02j,
                                           np.inf))
    yield ("newton_solve x 2000", "newton_batch", (target,))


def run_backend(impl, name, args):
    if name == "orbit_cocycle_batch":
        (zs,) = args
        return lambda: [impl.orbit_cocycle(CHEB, z, 1000, 4.0)
                        for z in zs[:200]]
    if name == "newton_batch":
        (target,) = args
        return lambda: [impl.newton_iterate_solve(CHEB, 4, target * t,
                                                  2.5 + 0.1j)
                        for t in np.linspace(1.0, 2.0, 2000)]
    fn = getattr(impl, name)
    return lambda: fn(*args)


def main():
    print(f"{'workload':28s} {'cython':>10s} {'python':>10s} {'speedup':>9s}")
    for label, name, args in workloads():
        tc = timeit(run_backend(_core, name, args))
        tp = timeit(run_backend(pyfallback, name, args))
        print(f"{label:28s} {tc * 1e3:9.2f}ms {tp * 1e3:9.2f}ms "
              f"{tp / tc:8.1f}x")


if __name__ == "__main__":
    main()
