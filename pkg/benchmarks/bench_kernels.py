"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]

Prints one row per kernel and problem size with the best-of-N wall time of
each backend, the speed-up, and whether the two outputs agree.
"""

import argparse
import timeit

import numpy as np

from sbepath import _backend


def cases(rng):
    for n in (200, 800):
        w = np.triu(rng.random((n, n)), 1)
        yield "best_partition", f"n={n}", (w,)
    for m in (10 ** 4, 10 ** 6):
        pos = np.sort(rng.normal(size=m))
        cum = np.concatenate([[0.0], np.cumsum(np.full(m, 1.0 / m))])
        yield "ball_mass_sorted", f"atoms={m}", (pos, cum, np.linspace(-3, 3, 2000), np.geomspace(1e-3, 2, 64))
    for m, d in ((2000, 1), (2000, 2)):
        atoms = rng.normal(size=(m, d))
        w = np.full(m, 1.0 / m)
        centers = rng.normal(size=(400, d))
        yield "ball_mass_hist", f"atoms={m} d={d}", (atoms, w, centers, np.geomspace(1e-3, 2, 64))


def _same(a, b):
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    return bool(np.allclose(a, b, rtol=1e-12, atol=1e-15))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _backend.BACKEND != "cython":
        print("compiled kernels unavailable; build with `pip install -e . --no-build-isolation`")
        return
    compiled, fallback = _backend.kernels, _backend.fallback
    print(f"{'kernel':<18}{'case':<20}{'cython s':>12}{'numpy s':>12}{'speed-up':>10}  agree")
    for name, label, arg in cases(np.random.default_rng(0)):
        fast, slow = getattr(compiled, name), getattr(fallback, name)
        t_fast = min(timeit.repeat(lambda: fast(*arg), number=1, repeat=args.repeat))
        t_slow = min(timeit.repeat(lambda: slow(*arg), number=1, repeat=args.repeat))
        agree = _same(fast(*arg), slow(*arg))
        print(f"{name:<18}{label:<20}{t_fast:>12.4g}{t_slow:>12.4g}{t_slow / t_fast:>10.1f}  {agree}")


if __name__ == "__main__":
    main()
