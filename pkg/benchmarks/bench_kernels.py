"""Compiled kernels against their pure-Python twins.

Times ``affine_modes`` at the mode counts of N = 4, 8, 16 and
``dopri_blowup`` on a blow-up and a bounded mean-value problem, checks
that both backends return identical arrays, and prints a table.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from nordwave import _kernels_py

try:
    from nordwave import _kernels as compiled
except ImportError:
    compiled = None

DOPRI = dict(t_max=200.0, threshold=1e8, rtol=1e-10, atol=1e-12, h_min=1e-14, h0=1e-3, max_steps=10**7)


def affine_case(N, stages=4, seed=0):
    rng = np.random.default_rng(seed)
    M = (2 * N + 1) ** 3

    def cplx(*s):
        return rng.standard_normal(s) + 1j * rng.standard_normal(s)

    args = (cplx(M), cplx(M), *(rng.standard_normal(M) for _ in range(4)),
            rng.standard_normal((stages, M)), rng.standard_normal((stages, M)), cplx(stages, M))

    def run(mod):
        ou = np.empty(M, complex)
        ov = np.empty(M, complex)
        mod.affine_modes(*args, ou, ov)
        return ou, ov
    return f"affine_modes N={N} ({M} modes)", run


def dopri_case(label, kappa, a0, f0, g0):
    def run(mod):
        d = DOPRI
        return mod.dopri_blowup(kappa, a0, f0, g0, d["t_max"], d["threshold"], d["rtol"], d["atol"],
                                d["h_min"], d["h0"], np.empty(0), d["max_steps"])
    return f"dopri_blowup {label}", run


def same(a, b):
    return all(np.array_equal(np.asarray(x), np.asarray(y)) for x, y in zip(a, b))


def best(fn, repeat):
    number = 1
    while timeit.timeit(fn, number=number) < 0.05:
        number *= 2
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if compiled is None:
        print("compiled extension not built; nothing to compare")
        return 1
    cases = [affine_case(N) for N in (4, 8, 16)]
    cases += [dopri_case("blow-up (kappa=0.25, a0=200)", 0.25, 200.0, 0.0, 0.1),
              dopri_case("bounded (kappa=0.5, a0=0.01)", 0.5, 0.01, 0.0, 0.01)]
    print(f"{'case':44s} {'cython [ms]':>12s} {'python [ms]':>12s} {'speed-up':>9s}  identical")
    for name, run in cases:
        tc = best(lambda: run(compiled), args.repeat)
        tp = best(lambda: run(_kernels_py), args.repeat)
        print(f"{name:44s} {tc * 1e3:12.4f} {tp * 1e3:12.4f} {tp / tc:9.1f}  {same(run(compiled), run(_kernels_py))}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
