"""Time the compiled kernels against the pure-Python fallbacks.

Run with ``python3 benchmarks/bench_kernels.py``. Each workload is run on
both backends and the results are checked for agreement before timing.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from oscbnf import kernels, parse_polynomial, parse_reduced
from oscbnf.flow import integrate, magnetic_orbit_check, toric_hamiltonian
from oscbnf.measure import SphereGrid, area_function
from oscbnf.phase import lift_point, random_sphere_points
from oscbnf.polynomial import H0


def _best(fn, repeat: int) -> tuple[float, object]:
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def workloads(scale: float):
    w = parse_reduced("X3 + 0.3*X1")
    n = max(16, int(256 * scale))
    grid = SphereGrid(1.0, n, n)
    h = H0 + parse_polynomial("0.2*X1^2 + 0.1*X3")
    rng = np.random.default_rng(0)
    y0 = rng.standard_normal((4, 4)) * 0.5
    steps = max(50, int(2000 * scale))
    F = toric_hamiltonian(parse_polynomial("X3 + 0.3*X1"), np.linspace(0.85, 1.15, 7))
    Y = lift_point(1.0, random_sphere_points(rng, 1.0, 4), 0.0)
    return {
        "sublevel areas": lambda: area_function(w, 1.0, grid=grid, method="grid").y,
        "midpoint, polynomial": lambda: integrate(h, y0, 1.0, steps=steps).final,
        "midpoint, toric composite": lambda: integrate(F, Y, 1.0, steps=max(20, steps // 4)).final,
        "midpoint, magnetic": lambda: magnetic_orbit_check(0.7, tol=1e-6).period,
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scale", type=float, default=1.0, help="workload size multiplier")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if not kernels.HAVE_COMPILED:
        print("compiled kernels unavailable; only the Python backend can run")
        return 1
    print(f"{'workload':28s} {'compiled':>10s} {'python':>10s} {'speedup':>8s}")
    for name, fn in workloads(args.scale).items():
        kernels.set_backend("compiled")
        tc, rc = _best(fn, args.repeat)
        kernels.set_backend("python")
        tp, rp = _best(fn, 1)
        kernels.set_backend("compiled")
        if not np.allclose(rc, rp, rtol=1e-10, atol=1e-12):
            raise SystemExit(f"{name}: backends disagree")
        print(f"{name:28s} {tc:10.4f} {tp:10.4f} {tp / tc:8.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
