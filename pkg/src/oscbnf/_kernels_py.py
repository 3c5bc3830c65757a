"""Pure-Python fallbacks for the compiled kernels.

Every function here has the same signature and return convention as its
counterpart in the compiled extension, so ``oscbnf.kernels`` can swap them
freely.
"""

from __future__ import annotations

import math

import numpy as np


def sublevel_areas(v0, v1, v2, mass, t):
    """Area of ``{w < t}`` for a function linear on each triangle.

    For a triangle with sorted vertex values ``v0 <= v1 <= v2`` the covered
    fraction is ``(t-v0)^2 / ((v1-v0)(v2-v0))`` below ``v1`` and
    ``1 - (v2-t)^2 / ((v2-v0)(v2-v1))`` above it.

    Parameters
    ----------
    v0, v1, v2 : ndarray, shape (M,)
        Sorted vertex values of each triangle.
    mass : ndarray, shape (M,)
        Symplectic area of each triangle.
    t : ndarray, shape (nt,)
        Sorted query levels.

    Returns
    -------
    ndarray, shape (nt,)
    """
    v0, v1, v2, mass, t = (np.asarray(a, dtype=float) for a in (v0, v1, v2, mass, t))
    nt = t.size
    i1 = np.searchsorted(t, v2, side="left")
    i0 = np.searchsorted(t, v0, side="right")
    diff = np.zeros(nt + 1)
    np.add.at(diff, i1, mass)
    out = np.cumsum(diff[:nt])
    count = np.maximum(i1 - i0, 0)
    total = int(count.sum())
    if total:
        cell = np.repeat(np.arange(v0.size), count)
        start = np.repeat(i0 - np.concatenate(([0], np.cumsum(count)[:-1])), count)
        idx = start + np.arange(total)
        x = t[idx]
        a, b, c, m = v0[cell], v1[cell], v2[cell], mass[cell]
        low = x <= b
        with np.errstate(divide="ignore", invalid="ignore"):
            frac = np.where(low, (x - a) ** 2 / ((b - a) * (c - a)),
                            1.0 - (c - x) ** 2 / ((c - a) * (c - b)))
        np.add.at(out, idx, m * frac)
    return out


def _poly_val_grad(y, exps, coefs):
    val = 0.0
    grad = [0.0, 0.0, 0.0, 0.0]
    for row, c in zip(exps, coefs):
        pw = [y[q] ** int(row[q]) for q in range(4)]
        val += c * pw[0] * pw[1] * pw[2] * pw[3]
        for q in range(4):
            e = int(row[q])
            if e == 0:
                continue
            g = c * e * y[q] ** (e - 1)
            for r in range(4):
                if r != q:
                    g *= pw[r]
            grad[q] += g
    return val, grad


def _clenshaw(coefs, x):
    b0 = b1 = 0.0
    for k in range(len(coefs) - 1, 0, -1):
        b0, b1 = coefs[k] + 2.0 * x * b0 - b1, b0
    return coefs[0] + x * b0 - b1


def _composite_field(y, e0, k0, e1, k1, lam_nodes, a_nodes, b_nodes, T, dT):
    p0, g0 = _poly_val_grad(y, e0, k0)
    p1, g1 = _poly_val_grad(y, e1, k1)
    L = len(lam_nodes)
    ell = []
    dell = []
    for l in range(L):
        prod = 1.0
        for m in range(L):
            if m != l:
                prod *= (p0 - lam_nodes[m]) / (lam_nodes[l] - lam_nodes[m])
        s = 0.0
        for m in range(L):
            if m == l:
                continue
            term = 1.0 / (lam_nodes[l] - lam_nodes[m])
            for r in range(L):
                if r != l and r != m:
                    term *= (p0 - lam_nodes[r]) / (lam_nodes[l] - lam_nodes[r])
            s += term
        ell.append(prod)
        dell.append(s)
    a = sum(e * v for e, v in zip(ell, a_nodes))
    b = sum(e * v for e, v in zip(ell, b_nodes))
    da = sum(e * v for e, v in zip(dell, a_nodes))
    db = sum(e * v for e, v in zip(dell, b_nodes))
    width = b - a
    x = 2.0 * (p1 - a) / width - 1.0
    xl = 2.0 * (-da * width - (p1 - a) * (db - da)) / (width * width)
    c0 = c1 = 0.0
    for l in range(L):
        tv = _clenshaw(T[l], x)
        dtv = _clenshaw(dT[l], x)
        c1 += ell[l] * dtv * 2.0 / width
        c0 += dell[l] * tv + ell[l] * dtv * xl
    return [
        c0 * g0[1] + c1 * g1[1],
        -(c0 * g0[0] + c1 * g1[0]),
        c0 * g0[3] + c1 * g1[3],
        -(c0 * g0[2] + c1 * g1[2]),
    ]


def _midpoint_run(field, yc, h, nsteps, solve_tol, max_iter, record=None):
    worst = 0
    for step in range(nsteps):
        f = field(yc)
        y1 = [yc[q] + h * f[q] for q in range(4)]
        it = 0
        while True:
            ym = [0.5 * (yc[q] + y1[q]) for q in range(4)]
            f = field(ym)
            ynew = [yc[q] + h * f[q] for q in range(4)]
            err = max(abs(ynew[q] - y1[q]) for q in range(4))
            scale = max(1.0, max(abs(v) for v in ynew))
            y1 = ynew
            it += 1
            if err <= solve_tol * scale:
                break
            if it >= max_iter:
                return yc, max(worst, it), step
        worst = max(worst, it)
        yc = y1
        if record is not None:
            record.append(yc)
    return yc, worst, -1


def midpoint_composite(y0, h, nsteps, e0, k0, e1, k1, lam_nodes, a_nodes,
                       b_nodes, T, dT, solve_tol, max_iter):
    """Implicit-midpoint flow of ``Phi(P0, P1)`` for a batch of points.

    ``Phi`` is a Lagrange-in-``P0`` times Chebyshev-in-``P1`` tensor whose
    Chebyshev variable is ``P1`` rescaled to ``[-1, 1]`` on the interpolated
    interval ``[a(P0), b(P0)]``.

    Returns
    -------
    out : ndarray, shape (nb, 4)
        Final points.
    worst : int
        Largest fixed-point iteration count used by any step.
    failed_step : int
        Index of the first non-converged step, or -1.
    """
    y0 = np.asarray(y0, dtype=float)
    args = (
        [list(map(int, r)) for r in np.asarray(e0)], list(map(float, k0)),
        [list(map(int, r)) for r in np.asarray(e1)], list(map(float, k1)),
        list(map(float, lam_nodes)), list(map(float, a_nodes)),
        list(map(float, b_nodes)),
        [list(map(float, r)) for r in np.asarray(T)],
        [list(map(float, r)) for r in np.asarray(dT)],
    )

    def field(y):
        return _composite_field(y, *args)

    out = y0.copy()
    worst = 0
    for p in range(y0.shape[0]):
        yf, it, failed = _midpoint_run(field, list(y0[p]), h, int(nsteps),
                                       solve_tol, int(max_iter))
        out[p] = yf
        worst = max(worst, it)
        if failed >= 0:
            return out, worst, failed
    return out, worst, -1


def _magnetic_field(y):
    sp = math.sin(y[1])
    cp = math.cos(y[1])
    q = y[2] + cp
    return [q / (sp * sp), y[3], 0.0, q / sp + q * q * cp / (sp * sp * sp)]


def midpoint_magnetic(y0, h, nsteps, solve_tol, max_iter):
    """Implicit-midpoint trajectory of the magnetic geodesic flow.

    State is ``(theta, phi, P_theta, p_phi)`` with canonical momentum
    ``P_theta``. Returns ``(traj, worst, failed_step)``; on failure the
    trajectory is truncated at the last accepted step.
    """
    start = [float(v) for v in y0]
    record = [start]
    _, worst, failed = _midpoint_run(_magnetic_field, start, h, int(nsteps),
                                     solve_tol, int(max_iter), record)
    return np.array(record), worst, failed
