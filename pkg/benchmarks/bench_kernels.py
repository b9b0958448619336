"""Time the compiled and pure-numpy kernels on the same inputs.

    python benchmarks/bench_kernels.py [--repeat 5] [--threads 1]

Prints one row per (kernel, space, backend) with the best wall time and the
largest absolute difference from the numpy result.
"""
import argparse
import os
import time

import numpy as np

from curvewidth import kernels
from curvewidth.geometry_core import geodesic_point, space, tangent_basis
from curvewidth.measures import make_rng, sample_ball


def _cases(sp, rng):
    e = sp.origin()
    P = sample_ball(sp, e, 1.0, 20_000, rng)
    C = sample_ball(sp, e, 1.0, 500, rng)
    Q = sample_ball(sp, e, 1.0, 3_000, rng)
    g = rng.standard_normal((20_000, sp.dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    U = g @ tangent_basis(sp, e)
    # ball polytope: unit balls about points near e, all containing e
    centers = geodesic_point(sp, e, U[:200], 0.3)
    return {
        "chord_min": lambda impl: kernels.chord_min(sp.code, P, C, impl),
        "chord_max": lambda impl: kernels.chord_max(sp.code, P, C, impl),
        "chord_pair_max": lambda impl: kernels.chord_pair_max(sp.code, Q, impl),
        "ball_exit": lambda impl: kernels.ball_exit(sp.code, e, U, centers, 1.0, impl),
    }


def _best(fn, repeat):
    out, best = None, float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _first(x):
    return np.asarray(x[0] if isinstance(x, tuple) else x, dtype=float)


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    os.environ["CURVEWIDTH_THREADS"] = str(args.threads)
    impls = kernels.implementations()
    print(f"default backend: {kernels.BACKEND}; threads: {args.threads}")
    print(f"{'kernel':<15} {'space':<11} {'backend':<9} {'best s':>9} {'speedup':>8} {'max diff':>10}")
    for kind in ("euclidean", "spherical", "hyperbolic"):
        sp = space(kind, 2)
        for name, run in _cases(sp, make_rng(0, "bench", kind)).items():
            base_t, base = _best(lambda: run(impls["python"]), args.repeat)
            for label, impl in impls.items():
                t, out = (base_t, base) if label == "python" else _best(lambda: run(impl), args.repeat)
                a, b = _first(out), _first(base)
                fin = np.isfinite(b)
                diff = float(np.max(np.abs(a[fin] - b[fin]))) if fin.any() else 0.0
                print(f"{name:<15} {kind:<11} {label:<9} {t:>9.4f} {base_t / t:>7.1f}x {diff:>10.2e}")


if __name__ == "__main__":
    main()
