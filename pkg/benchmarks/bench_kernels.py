"""Compiled core against the pure-Python fallback on the hot kernels.

    python3 benchmarks/bench_kernels.py [--repeat 3]

Each kernel runs on a small workload in both backends; outputs are compared and
the per-path throughput ratio is printed.
"""

import argparse
import time

import numpy as np

from bsle import _pycore

try:
    from bsle import _core
except ImportError:  # extension not built
    _core = None

SEED = 12345


def workloads(n_small):
    streams = np.arange(n_small, dtype=np.uint64)
    path = np.cumsum(np.r_[0.0, 0.2 * np.random.default_rng(SEED).standard_normal(2000)])
    pts = np.linspace(0.05, 3.0, 50)
    return {
        "flow_real (50 pts x 2000 steps)": lambda m: m.flow_real(path, 0.01, 2000, 0.0, pts),
        "occupation_taus": lambda m: m.occupation_taus(4.0, np.array([0.5, 1.5]), np.array([-0.5, -1.5]),
                                                       0.005, 1e-12, 144.0, 10_000_000, SEED, streams, 5, True),
        "rho_lifetimes": lambda m: m.rho_lifetimes(4.0, -4.0, -4.0, 1.0, -1.0, 0.01, 1e-3, 1e-5, 10_000_000,
                                                   np.inf, SEED, streams, 2),
        "bessel_lifetimes": lambda m: m.bessel_lifetimes(4.0, 0.0, 8, 3400, -1.0, SEED, streams, 4),
        "bsle_martingale": lambda m: m.bsle_martingale(4.0, -4.0, -4.0, 1.0, -1.0, 1e-4, [100, 200], 10.0,
                                                       SEED, streams, 1),
    }


def timed(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return np.allclose(np.asarray(a, dtype=float), np.asarray(b, dtype=float), rtol=1e-12, atol=0.0,
                       equal_nan=True)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--paths", type=int, default=20)
    args = ap.parse_args()
    if _core is None:
        print("compiled core not built; nothing to compare")
        return
    print(f"{'kernel':34s} {'python [s]':>11s} {'cython [s]':>11s} {'speedup':>8s}  match")
    for name, fn in workloads(args.paths).items():
        tp, op = timed(lambda: fn(_pycore), 1)
        tc, oc = timed(lambda: fn(_core), args.repeat)
        print(f"{name:34s} {tp:11.4f} {tc:11.4f} {tp / tc:8.1f}  {same(op, oc)}")


if __name__ == "__main__":
    main()
