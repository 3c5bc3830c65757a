"""Backend selection for the hot loops.

The compiled extension is used when it imports; otherwise the pure-Python
implementation in ``oscbnf._kernels_py`` is used. ``OSCBNF_KERNELS`` is not
consulted; call :func:`set_backend` to switch explicitly.
"""

from __future__ import annotations

import numpy as np

from . import _kernels_py

try:
    from . import _ckernels
except ImportError:  # pragma: no cover - depends on build
    _ckernels = None

HAVE_COMPILED = _ckernels is not None
BACKEND = "compiled" if HAVE_COMPILED else "python"
_impl = _ckernels if HAVE_COMPILED else _kernels_py


def set_backend(name: str) -> str:
    """Select ``"compiled"`` or ``"python"`` and return the previous name."""
    global BACKEND, _impl
    if name not in ("compiled", "python"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "compiled" and not HAVE_COMPILED:
        raise RuntimeError("compiled kernels are not available in this build")
    prev = BACKEND
    BACKEND = name
    _impl = _ckernels if name == "compiled" else _kernels_py
    return prev


def sublevel_areas(v0, v1, v2, mass, t) -> np.ndarray:
    c = np.ascontiguousarray
    return np.asarray(_impl.sublevel_areas(
        c(v0, dtype=float), c(v1, dtype=float), c(v2, dtype=float),
        c(mass, dtype=float), c(t, dtype=float)))


def midpoint_composite(y0, h, nsteps, e0, k0, e1, k1, lam_nodes, a_nodes,
                       b_nodes, T, dT, solve_tol, max_iter):
    c = np.ascontiguousarray
    out, worst, failed = _impl.midpoint_composite(
        c(y0, dtype=float), float(h), int(nsteps),
        c(e0, dtype=np.int_), c(k0, dtype=float),
        c(e1, dtype=np.int_), c(k1, dtype=float),
        c(lam_nodes, dtype=float), c(a_nodes, dtype=float),
        c(b_nodes, dtype=float), c(T, dtype=float), c(dT, dtype=float),
        float(solve_tol), int(max_iter))
    return np.asarray(out), int(worst), int(failed)


def midpoint_magnetic(y0, h, nsteps, solve_tol, max_iter):
    out, worst, failed = _impl.midpoint_magnetic(
        np.ascontiguousarray(y0, dtype=float), float(h), int(nsteps),
        float(solve_tol), int(max_iter))
    return np.asarray(out), int(worst), int(failed)
