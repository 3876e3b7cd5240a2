"""
Wall-clock comparison of the numba and numpy backends of the hot kernels.

    python3 benchmarks/bench_kernels.py [--n 10000000] [--repeat 3]

Each kernel is run once per backend to warm up (numba compilation is
excluded), then timed ``repeat`` times; the best time is reported together
with a check that both backends return identical results.
"""
import argparse
import time

import numpy as np

from argminproc import _kernels
from argminproc.extract import left_ends, right_ends
from argminproc.pathsim import IncrementModel, simulate_brownian, simulate_walk
from argminproc.renewal_laws import h_ab_grid


def best_of(fn, repeat):
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
    if a.dtype.kind == "f":
        return bool(np.allclose(a, b, rtol=1e-12, atol=1e-14))
    return bool(np.array_equal(a, b))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=10_000_000, help="path length for the sliding kernels")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    dt = 1e-3
    path = simulate_brownian(args.n * dt, dt, 1)
    x = path.values
    m = 1000
    le = left_ends(x, m)
    re = right_ends(x, m)
    t_idx = np.flatnonzero(le & re)[:2000]
    walk = simulate_walk(IncrementModel.rademacher(), args.n, 2).values
    states = _kernels.sliding_last_argmin(walk, 8)
    h = h_ab_grid(1.0, 1.0, 1e-3 * np.arange(15_001))

    cases = [
        ("sliding_last_argmin", lambda: _kernels.sliding_last_argmin(x, m)),
        ("first_ladder_points", lambda: _kernels.first_ladder_points(x, le, np.arange(0, args.n // 2, 50_000))),
        ("construction_trials", lambda: _kernels.construction_trials(x, le, re, t_idx, m)),
        ("transition_tally", lambda: _kernels.transition_tally(states, 9)),
        ("volterra_renewal", lambda: _kernels.volterra_renewal(h, 1e-3)),
    ]
    print(f"{'kernel':<22}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}  agree")
    for name, fn in cases:
        res = {}
        for backend in ("numba", "numpy"):
            with _kernels.use_backend(backend):
                fn()
                res[backend] = best_of(fn, args.repeat)
        tn, on = res["numba"]
        tp, op = res["numpy"]
        print(f"{name:<22}{tn:>12.4f}{tp:>12.4f}{tp / tn:>10.1f}  {same(on, op)}")


if __name__ == "__main__":
    main()
