"""Functions on a round sphere: derivatives and critical points.

A sphere function exposes an ambient extension with gradient and Hessian.
Only tangential combinations are used, so the choice of extension does not
matter.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import sympy

from .reduced import SX1, SX2, SX3, ReducedPolynomial


class SphereFunction:
    """Base class; subclasses provide ``value``, ``grad`` and ``hess``."""

    radius: float

    def value(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def grad(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def hess(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def scalar_grad(self, x1: float, x2: float, x3: float) -> tuple[float, float, float]:
        g = self.grad(np.array([x1, x2, x3]))
        return float(g[0]), float(g[1]), float(g[2])

    def scalar_value(self, x1: float, x2: float, x3: float) -> float:
        return float(self.value(np.array([x1, x2, x3])))


class PolynomialSphereFunction(SphereFunction):
    """A real reduced polynomial restricted to the sphere of level ``lam``."""

    def __init__(self, w: ReducedPolynomial, lam: float):
        if not w.is_real():
            raise ValueError("sphere functions must be real-valued")
        self.w = w
        self.lam = float(lam)
        self.radius = 0.5 * self.lam
        expr = sympy.Integer(0)
        for (e1, e2, e3, l), v in w.terms.items():
            expr += sympy.Float(float(v.x) * self.lam ** l, 17) * SX1 ** e1 * SX2 ** e2 * SX3 ** e3
        args = (SX1, SX2, SX3)
        self._f = sympy.lambdify(args, expr, "math")
        self._g = sympy.lambdify(args, [sympy.diff(expr, v) for v in args], "math")

    def value(self, X):
        return self.w.evaluate_points(X, self.lam)

    def grad(self, X):
        return self.w.gradient(X, self.lam)

    def hess(self, X):
        return self.w.hessian(X, self.lam)

    def scalar_value(self, x1, x2, x3):
        return self._f(x1, x2, x3)

    def scalar_grad(self, x1, x2, x3):
        return self._g(x1, x2, x3)


class CallableSphereFunction(SphereFunction):
    """Vectorized callable ``f(X)`` on the sphere, differentiated by central differences.

    The function is extended to a neighbourhood as ``f(R X / |X|)``.
    """

    def __init__(self, func: Callable[[np.ndarray], np.ndarray], radius: float, step: float = 1e-4):
        self.func = func
        self.radius = float(radius)
        self.h = step * self.radius

    def _ext(self, X):
        X = np.asarray(X, dtype=float)
        n = np.linalg.norm(X, axis=-1, keepdims=True)
        return self.func(self.radius * X / n)

    def value(self, X):
        return self.func(np.asarray(X, dtype=float))

    def grad(self, X):
        X = np.asarray(X, dtype=float)
        out = np.empty(X.shape)
        for i in range(3):
            e = np.zeros(3)
            e[i] = self.h
            out[..., i] = (self._ext(X + e) - self._ext(X - e)) / (2 * self.h)
        return out

    def hess(self, X):
        X = np.asarray(X, dtype=float)
        out = np.empty(X.shape + (3,))
        for i in range(3):
            e = np.zeros(3)
            e[i] = self.h
            out[..., i, :] = (self.grad(X + e) - self.grad(X - e)) / (2 * self.h)
        return 0.5 * (out + np.swapaxes(out, -1, -2))


def as_sphere_function(w, lam: float | None = None) -> SphereFunction:
    if isinstance(w, SphereFunction):
        return w
    if isinstance(w, ReducedPolynomial):
        if lam is None:
            raise ValueError("a level is required for reduced polynomials")
        return PolynomialSphereFunction(w, lam)
    raise TypeError(f"cannot use {type(w).__name__} as a sphere function")


def tangent_basis(X: np.ndarray) -> np.ndarray:
    """Orthonormal tangent frames, shape ``X.shape[:-1] + (3, 2)``."""
    X = np.asarray(X, dtype=float)
    n = X / np.linalg.norm(X, axis=-1, keepdims=True)
    ref = np.where(np.abs(n[..., :1]) < 0.9, np.array([1.0, 0, 0]), np.array([0, 1.0, 0]))
    e1 = np.cross(n, ref)
    e1 /= np.linalg.norm(e1, axis=-1, keepdims=True)
    e2 = np.cross(n, e1)
    return np.stack([e1, e2], axis=-1)


def riemannian_grad(f: SphereFunction, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    g = f.grad(X)
    R2 = np.sum(X * X, axis=-1, keepdims=True)
    return g - np.sum(g * X, axis=-1, keepdims=True) * X / R2


def riemannian_hess_2d(f: SphereFunction, X: np.ndarray, B: np.ndarray | None = None) -> np.ndarray:
    """Tangential Hessian ``B^T (H - mu I) B`` with ``mu = grad.X / R^2``."""
    X = np.asarray(X, dtype=float)
    if B is None:
        B = tangent_basis(X)
    H = f.hess(X)
    g = f.grad(X)
    mu = np.sum(g * X, axis=-1) / np.sum(X * X, axis=-1)
    Ht = H - mu[..., None, None] * np.eye(3)
    return np.einsum("...ia,...ij,...jb->...ab", B, Ht, B)


@dataclass(frozen=True)
class CriticalPoint:
    X: tuple[float, float, float]
    value: float
    eigenvalues: tuple[float, float]
    kind: str  # "min", "max", "saddle" or "degenerate"


def sphere_seeds(radius: float, n_polar: int = 32, n_azimuth: int = 64) -> np.ndarray:
    """Covering grid of seed points (cell centres in ``X3`` and angle)."""
    x3 = radius * (-1 + (2 * np.arange(n_polar) + 1) / n_polar)
    th = 2 * np.pi * (np.arange(n_azimuth) + 0.5) / n_azimuth
    T3, TT = np.meshgrid(x3, th, indexing="ij")
    r = np.sqrt(radius ** 2 - T3 ** 2)
    return np.stack([r * np.cos(TT), r * np.sin(TT), T3], axis=-1).reshape(-1, 3)


def _newton(f: SphereFunction, X: np.ndarray, iters: int, max_step: float) -> np.ndarray:
    R = f.radius
    for _ in range(iters):
        B = tangent_basis(X)
        g2 = np.einsum("nia,ni->na", B, f.grad(X))
        H2 = riemannian_hess_2d(f, X, B)
        step = -np.einsum("nab,nb->na", np.linalg.pinv(H2, rcond=1e-12), g2)
        norm = np.linalg.norm(step, axis=-1, keepdims=True)
        step = np.where(norm > max_step, step * (max_step / np.maximum(norm, 1e-300)), step)
        X = X + np.einsum("nia,na->ni", B, step)
        X = R * X / np.linalg.norm(X, axis=-1, keepdims=True)
    return X


def find_critical_points(f: SphereFunction, n_polar: int = 32, n_azimuth: int = 64,
                         grad_tol: float = 1e-10, merge_radius: float | None = None,
                         degeneracy_tol: float = 1e-6, iters: int = 60) -> list[CriticalPoint]:
    """All critical points reachable by Newton iteration from a seed grid.

    ``grad_tol`` and ``degeneracy_tol`` are relative to the function's
    gradient and Hessian scales on the seed grid.
    """
    R = f.radius
    if merge_radius is None:
        merge_radius = 2e-6 * R
    seeds = sphere_seeds(R, n_polar, n_azimuth)
    gscale = float(np.max(np.linalg.norm(riemannian_grad(f, seeds), axis=-1)))
    if gscale == 0.0:
        raise ValueError("function is constant on the sphere")
    X = _newton(f, seeds, iters, 0.2 * R)
    gnorm = np.linalg.norm(riemannian_grad(f, X), axis=-1)
    keep = X[gnorm <= grad_tol * max(gscale, 1.0)]
    # refine survivors once more, then merge
    if keep.size:
        keep = _newton(f, keep, 3, 0.2 * R)
    pts: list[np.ndarray] = []
    for x in keep:
        if all(np.linalg.norm(x - p) > merge_radius for p in pts):
            pts.append(x)
    if not pts:
        return []
    P = np.array(pts)
    eig = np.linalg.eigvalsh(riemannian_hess_2d(f, P))
    hscale = max(float(np.max(np.abs(eig))), gscale / R)
    out = []
    for x, ev, v in zip(P, eig, f.value(P)):
        if np.min(np.abs(ev)) < degeneracy_tol * hscale:
            kind = "degenerate"
        elif ev[0] > 0:
            kind = "min"
        elif ev[1] < 0:
            kind = "max"
        else:
            kind = "saddle"
        out.append(CriticalPoint(tuple(map(float, x)), float(v), (float(ev[0]), float(ev[1])), kind))
    out.sort(key=lambda c: c.value)
    return out
