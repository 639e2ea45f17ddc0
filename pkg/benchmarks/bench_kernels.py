#!/usr/bin/env python3
"""Benchmark the compiled kernels against the scipy-backed fallback.

Workloads mirror the hot paths of the solvers: the fused Crank-Nicolson
sweeps at the vibrational problem's size, single tridiagonal solves, and
an implicit-Euler style real solve loop.

Run:  python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from monoctrl.kernels import pure

try:
    from monoctrl.kernels import _tridiag as compiled
except ImportError:
    compiled = None


def timeit(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.default_rng(0)
    n, steps = 512, 4000
    h_d = rng.normal(size=n) + 3.0
    h_off = rng.normal(size=n - 1)
    m_d = rng.normal(size=n)
    m_off = np.zeros(n - 1)
    v = 1e-3 * rng.normal(size=steps)
    x0 = rng.normal(size=n) + 1j * rng.normal(size=n)
    x0 /= np.linalg.norm(x0)

    z_dl = 1j * rng.normal(size=n - 1)
    z_d = 1.0 + 1j * rng.normal(size=n)
    z_du = 1j * rng.normal(size=n - 1)
    z_b = x0.copy()

    r_dl = -np.abs(rng.normal(size=n - 1))
    r_d = 2.0 + np.abs(rng.normal(size=n))
    r_du = -np.abs(rng.normal(size=n - 1))
    r_b = np.abs(rng.normal(size=n))

    cases = [
        (f"cn forward sweep ({n} pts x {steps} steps)", 3, lambda impl: (
            lambda: impl.cn_propagate_forward(h_off, h_d, h_off, m_off, m_d, m_off, v, 1.6, x0))),
        (f"cn adjoint sweep ({n} pts x {steps} steps)", 3, lambda impl: (
            lambda: impl.cn_propagate_adjoint(h_off, h_d, h_off, m_off, m_d, m_off, v, 1.6, x0))),
        (f"complex tridiagonal solve (n={n}, 2000 calls)", 3, lambda impl: (
            lambda: [impl.solve_tridiag(z_dl, z_d, z_du, z_b) for _ in range(2000)])),
        (f"real tridiagonal solve (n={n}, 2000 calls)", 3, lambda impl: (
            lambda: [impl.solve_tridiag(r_dl, r_d, r_du, r_b) for _ in range(2000)])),
    ]

    print(f"{'workload':<46} {'pure':>10} {'compiled':>10} {'speedup':>8}")
    for label, repeats, make in cases:
        t_pure = timeit(make(pure), repeats)
        if compiled is None:
            print(f"{label:<46} {t_pure*1e3:>8.1f}ms {'n/a':>10} {'n/a':>8}")
            continue
        t_comp = timeit(make(compiled), repeats)
        print(f"{label:<46} {t_pure*1e3:>8.1f}ms {t_comp*1e3:>8.1f}ms {t_pure/t_comp:>7.1f}x")
    if compiled is None:
        print("\ncompiled kernels unavailable; build with `pip install -e .`")
    else:
        ref = pure.cn_propagate_forward(h_off, h_d, h_off, m_off, m_d, m_off, v, 1.6, x0)
        got = compiled.cn_propagate_forward(h_off, h_d, h_off, m_off, m_d, m_off, v, 1.6, x0)
        print(f"\nmax |compiled - pure| on the forward sweep: {np.max(np.abs(ref - got)):.2e}")


if __name__ == "__main__":
    main()
