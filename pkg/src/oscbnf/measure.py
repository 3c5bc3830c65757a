"""Symplectic measure on the reduced spheres, pushforward densities and area laws.

On the sphere of level ``lam`` the symplectic area is ``dX3 dtheta``, so a
uniform product grid in ``(X3, theta)`` carries uniform weights and total
mass ``2 pi lam``.

Two routes to the area function ``A(t) = Area{w < t}`` are provided:

* ``"grid"``: ``w`` is interpolated linearly on a triangulation of the
  ``(X3, theta)`` rectangle of a :class:`SphereGrid` and the sublevel area
  of the interpolant is computed exactly. Works for any function. Functions
  of ``X3`` alone are exact; otherwise the error is first order in the mesh
  width, dominated by the polar rows where ``X1, X2 ~ sqrt(lam/2 - |X3|)``.
* ``"orbit"``: for a perfect Morse function the derivative of ``A`` is the
  period of the Hamiltonian orbit on each level. Periods are integrated at
  Chebyshev levels and ``A`` is their spectral primitive (:class:`AreaLaw`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Chebyshev
from scipy.integrate import solve_ivp
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from . import kernels
from .reduced import BRACKET_SIGN, ReducedPolynomial
from .spherefn import (
    CriticalPoint, PolynomialSphereFunction, SphereFunction, _newton,
    as_sphere_function, find_critical_points,
)


# ---------------------------------------------------------------- grids


@dataclass(frozen=True)
class SphereGrid:
    """Uniform ``(X3, theta)`` product grid on the sphere of level ``lam``.

    Nodes are cell centres; every node carries weight ``dX3 * dtheta``.
    """

    lam: float
    n3: int = 256
    ntheta: int = 256

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("level must be positive")
        if self.n3 < 2 or self.ntheta < 2:
            raise ValueError("grid needs at least 2 cells per direction")

    @property
    def radius(self) -> float:
        return 0.5 * self.lam

    @property
    def dX3(self) -> float:
        return self.lam / self.n3

    @property
    def dtheta(self) -> float:
        return 2 * np.pi / self.ntheta

    @property
    def weight(self) -> float:
        return self.dX3 * self.dtheta

    @property
    def total_weight(self) -> float:
        return self.weight * self.n3 * self.ntheta

    @property
    def x3_centres(self) -> np.ndarray:
        return -self.radius + self.dX3 * (np.arange(self.n3) + 0.5)

    @property
    def x3_edges(self) -> np.ndarray:
        e = -self.radius + self.dX3 * np.arange(self.n3 + 1)
        e[-1] = self.radius
        return e

    @property
    def theta(self) -> np.ndarray:
        return self.dtheta * (np.arange(self.ntheta) + 0.5)

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """``(X3, theta)`` node arrays of shape ``(n3, ntheta)``."""
        return np.meshgrid(self.x3_centres, self.theta, indexing="ij")

    @staticmethod
    def cartesian(X3, theta, radius) -> np.ndarray:
        r = np.sqrt(np.clip(radius ** 2 - X3 ** 2, 0.0, None))
        return np.stack([r * np.cos(theta), r * np.sin(theta), X3], axis=-1)

    def node_points(self) -> np.ndarray:
        return self.cartesian(*self.nodes(), self.radius)

    def edge_points(self) -> np.ndarray:
        """Points at ``X3`` edges on each ``theta`` column, shape ``(n3+1, ntheta, 3)``."""
        T3, TT = np.meshgrid(self.x3_edges, self.theta, indexing="ij")
        return self.cartesian(T3, TT, self.radius)

    def integrate(self, values: np.ndarray) -> float:
        """Weighted sum of node values (shape ``(n3, ntheta)``)."""
        return float(np.sum(np.asarray(values)) * self.weight)


# ---------------------------------------------------------------- monotone maps


class MonotoneMap:
    """Strictly increasing sampled map with monotone cubic interpolation.

    The inverse is seeded by interpolating the swapped samples and polished by
    Newton steps on the forward interpolant, so ``forward(inverse(y)) == y``
    to rounding on the range interior. Outside the sampled interval both
    directions clamp to the endpoints.
    """

    def __init__(self, x, y, meta: dict | None = None):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.ndim != 1 or x.shape != y.shape or x.size < 2:
            raise ValueError("need matching 1-D sample arrays with at least 2 points")
        if np.any(np.diff(x) <= 0) or np.any(np.diff(y) <= 0):
            raise ValueError("samples must be strictly increasing in both coordinates")
        self.x = x
        self.y = y
        self.meta = dict(meta or {})
        self._fwd = PchipInterpolator(x, y, extrapolate=False)
        self._dfwd = self._fwd.derivative()
        self._inv = PchipInterpolator(y, x, extrapolate=False)

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.x[0]), float(self.x[-1])

    @property
    def range(self) -> tuple[float, float]:
        return float(self.y[0]), float(self.y[-1])

    def __call__(self, t):
        return self.forward(t)

    def forward(self, t):
        t = np.clip(np.asarray(t, dtype=float), self.x[0], self.x[-1])
        return self._fwd(t)

    def derivative(self, t):
        t = np.clip(np.asarray(t, dtype=float), self.x[0], self.x[-1])
        return self._dfwd(t)

    def inverse(self, v, newton_steps: int = 3):
        v = np.clip(np.asarray(v, dtype=float), self.y[0], self.y[-1])
        t = self._inv(v)
        for _ in range(newton_steps):
            d = self._dfwd(t)
            ok = d > 0
            step = np.where(ok, (self._fwd(t) - v) / np.where(ok, d, 1.0), 0.0)
            t = np.clip(t - step, self.x[0], self.x[-1])
        return t


# ---------------------------------------------------------------- extrema


def sphere_extrema(f: SphereFunction, seeds: np.ndarray | None = None) -> tuple[CriticalPoint, CriticalPoint]:
    """Global minimum and maximum, refined by Newton from the best seeds."""
    from .spherefn import sphere_seeds

    R = f.radius
    if seeds is None:
        seeds = sphere_seeds(R, 32, 64)
    v = f.value(seeds)
    res = []
    for order in (np.argsort(v)[:6], np.argsort(-v)[:6]):
        X = _newton(f, seeds[order], 40, 0.1 * R)
        vals = f.value(X)
        # Newton may land on a saddle; fall back to the best seed in that case
        cand = np.concatenate([vals, v[order]])
        pts = np.concatenate([X, seeds[order]])
        res.append((cand, pts))
    (cmin, pmin), (cmax, pmax) = res
    i, j = int(np.argmin(cmin)), int(np.argmax(cmax))
    lo = CriticalPoint(tuple(map(float, pmin[i])), float(cmin[i]), (0.0, 0.0), "min")
    hi = CriticalPoint(tuple(map(float, pmax[j])), float(cmax[j]), (0.0, 0.0), "max")
    return lo, hi


# ---------------------------------------------------------------- grid area


def vertex_points(grid: SphereGrid) -> np.ndarray:
    """Mesh vertices at ``X3`` edges and ``theta`` edges, shape ``(n3+1, ntheta+1, 3)``.

    The last ``theta`` column repeats the first.
    """
    th = grid.dtheta * np.arange(grid.ntheta + 1)
    T3, TT = np.meshgrid(grid.x3_edges, th, indexing="ij")
    return grid.cartesian(T3, TT, grid.radius)


def _triangles(w, lam: float, grid: SphereGrid):
    f = as_sphere_function(w, lam)
    V = np.asarray(f.value(vertex_points(grid)), dtype=float)
    V[:, -1] = V[:, 0]
    a, b, c, d = V[:-1, :-1], V[1:, :-1], V[:-1, 1:], V[1:, 1:]
    tri = np.stack([np.stack([a, b, d], -1).reshape(-1, 3),
                    np.stack([a, c, d], -1).reshape(-1, 3)]).reshape(-1, 3)
    tri.sort(axis=1)
    mass = np.full(tri.shape[0], 0.5 * grid.weight)
    return tri[:, 0].copy(), tri[:, 1].copy(), tri[:, 2].copy(), mass, V


def grid_sublevel_areas(w, lam: float, grid: SphereGrid, t) -> np.ndarray:
    """Grid estimate of ``Area{w < t}``."""
    v0, v1, v2, mass, _ = _triangles(w, lam, grid)
    t = np.asarray(t, dtype=float)
    order = np.argsort(t, kind="stable")
    out = np.empty_like(t)
    out[order] = kernels.sublevel_areas(v0, v1, v2, mass, t[order])
    return out


# ---------------------------------------------------------------- orbit law


class NotPerfectMorseError(ValueError):
    """The function is not a perfect Morse function on the sphere."""

    def __init__(self, message: str, critical_points=None):
        super().__init__(message)
        self.critical_points = critical_points


def _slerp(p: np.ndarray, q: np.ndarray, R: float):
    pn, qn = p / np.linalg.norm(p), q / np.linalg.norm(q)
    c = float(np.clip(pn @ qn, -1.0, 1.0))
    if c < -1 + 1e-12:
        ref = np.array([1.0, 0, 0]) if abs(pn[0]) < 0.9 else np.array([0, 1.0, 0])
        perp = np.cross(pn, ref)
        perp /= np.linalg.norm(perp)
        return lambda s: R * (np.cos(np.pi * s) * pn + np.sin(np.pi * s) * perp)
    ang = math.acos(c)
    perp = qn - c * pn
    perp /= np.linalg.norm(perp)
    return lambda s: R * (np.cos(ang * s) * pn + np.sin(ang * s) * perp)


def orbit_period(f: SphereFunction, X0: np.ndarray, t_max: float, rtol: float = 1e-12) -> float:
    """Period of the orbit of ``dX/dt = s grad f x X`` through ``X0``.

    Raises
    ------
    RuntimeError
        If the trajectory does not return near ``X0`` before ``t_max``.
    """
    s = float(BRACKET_SIGN)
    R = float(np.linalg.norm(X0))
    sg = f.scalar_grad

    def rhs(_t, X):
        g1, g2, g3 = sg(X[0], X[1], X[2])
        return (s * (g2 * X[2] - g3 * X[1]), s * (g3 * X[0] - g1 * X[2]), s * (g1 * X[1] - g2 * X[0]))

    v0 = np.asarray(rhs(0.0, X0))
    vn = v0 / np.linalg.norm(v0)

    def plane(_t, X):
        return vn[0] * (X[0] - X0[0]) + vn[1] * (X[1] - X0[1]) + vn[2] * (X[2] - X0[2])

    plane.direction = 1.0
    plane.terminal = 2
    sol = solve_ivp(rhs, (0.0, t_max), X0, method="DOP853", rtol=rtol, atol=1e-14 * R,
                    events=plane)
    te, ye = sol.t_events[0], sol.y_events[0]
    # the start point itself registers as an upward crossing at t ~ 0
    for t, y in zip(te, ye):
        if t > 1e-9 * t_max and np.linalg.norm(y - X0) < 1e-3 * R:
            return float(t)
    raise RuntimeError("orbit did not close within the time bound")


@dataclass(frozen=True)
class AreaLaw:
    """Spectral area function of a perfect Morse function on one sphere.

    ``rho(t)`` is the orbit period on level ``t``; it is sampled at Chebyshev
    points in ``u = (t - a) / (b - a)`` and ``A`` is its exact primitive.

    Attributes
    ----------
    lam, a, b : float
        Level and the minimum and maximum values.
    rho_u : Chebyshev
        Period as a function of ``u`` on ``[0, 1]``.
    area_u : Chebyshev
        ``A`` as a function of ``u``, with ``area_u(0) = 0``.
    mass_error : float
        Relative gap between ``A(b)`` and ``2 pi lam``.
    """

    lam: float
    a: float
    b: float
    rho_u: Chebyshev
    area_u: Chebyshev
    mass_error: float
    Xmin: tuple = field(default=(0.0, 0.0, 0.0))
    Xmax: tuple = field(default=(0.0, 0.0, 0.0))

    @classmethod
    def build(cls, w, lam: float, n_cheb: int = 32, rtol: float = 1e-12,
              critical_points: list[CriticalPoint] | None = None) -> "AreaLaw":
        f = as_sphere_function(w, lam)
        R = f.radius
        cps = find_critical_points(f) if critical_points is None else critical_points
        kinds = [c.kind for c in cps]
        if kinds != ["min", "max"]:
            raise NotPerfectMorseError(
                f"expected one minimum and one maximum, found {kinds[:10]} at level {lam:g}", cps)
        cmin, cmax = cps
        a, b = cmin.value, cmax.value
        pmin, pmax = np.array(cmin.X), np.array(cmax.X)
        arc = _slerp(pmin, pmax, R)
        det_min = abs(np.prod(cmin.eigenvalues))
        det_max = abs(np.prod(cmax.eigenvalues))
        bound = 2 * np.pi / (R * math.sqrt(min(det_min, det_max)))
        t_max = 50.0 * max(2 * np.pi * lam / (b - a), bound)

        def period_at(u):
            out = np.empty(np.size(u))
            for i, ui in enumerate(np.atleast_1d(u)):
                level = a + float(ui) * (b - a)
                tau = brentq(lambda s: f.scalar_value(*arc(s)) - level, 0.0, 1.0,
                             xtol=1e-15, rtol=1e-15)
                out[i] = orbit_period(f, np.asarray(arc(tau), dtype=float), t_max, rtol)
            return out

        rho = Chebyshev.interpolate(period_at, n_cheb - 1, domain=[0.0, 1.0])
        area = rho.integ(lbnd=0.0) * (b - a)
        total = float(area(1.0))
        return cls(float(lam), float(a), float(b), rho, area,
                   abs(total - 2 * np.pi * lam) / (2 * np.pi * lam),
                   tuple(map(float, pmin)), tuple(map(float, pmax)))

    @property
    def total(self) -> float:
        return 2 * np.pi * self.lam

    def _u(self, t):
        return (np.asarray(t, dtype=float) - self.a) / (self.b - self.a)

    def area(self, t):
        u = self._u(t)
        return np.where(u <= 0, 0.0, np.where(u >= 1, self.total, self.area_u(np.clip(u, 0, 1))))

    def density(self, t):
        u = self._u(t)
        inside = (u >= 0) & (u <= 1)
        return np.where(inside, self.rho_u(np.clip(u, 0, 1)), 0.0)

    def inverse(self, m, iters: int = 60):
        """Level ``t`` with ``area(t) = m``, by safeguarded Newton in ``u``."""
        m = np.clip(np.asarray(m, dtype=float), 0.0, float(self.area_u(1.0)))
        lo = np.zeros_like(m)
        hi = np.ones_like(m)
        u = m / float(self.area_u(1.0))
        scale = self.b - self.a
        for _ in range(iters):
            F = self.area_u(u) - m
            lo = np.where(F < 0, u, lo)
            hi = np.where(F > 0, u, hi)
            d = self.rho_u(u) * scale
            un = u - F / np.where(d > 0, d, 1.0)
            bad = (un <= lo) | (un >= hi) | (d <= 0)
            un = np.where(bad, 0.5 * (lo + hi), un)
            if np.all(np.abs(un - u) < 1e-16):
                u = un
                break
            u = un
        return self.a + u * scale

    def to_monotone_map(self, n: int = 2049) -> MonotoneMap:
        t = self.a + (self.b - self.a) * 0.5 * (1 - np.cos(np.pi * np.arange(n) / (n - 1)))
        return MonotoneMap(t, self.area(t), {"method": "orbit", "lambda": self.lam,
                                             "support": [self.a, self.b]})

    def phi_chebyshev(self) -> np.ndarray:
        """Coefficients of ``A / 2 pi`` in ``x = 2u - 1``."""
        return np.asarray(self.area_u.coef) / (2 * np.pi)


# ---------------------------------------------------------------- densities


@dataclass(frozen=True)
class DensityProfile:
    """Pushforward density sampled on uniform bins of the support.

    ``values`` are bin-average densities at bin centres; ``masses`` are the
    exact bin masses of the underlying area estimate.
    """

    lam: float
    support: tuple[float, float]
    edges: np.ndarray
    masses: np.ndarray
    method: str = "grid"
    meta: dict = field(default_factory=dict)

    @property
    def centres(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def values(self) -> np.ndarray:
        return self.masses / self.widths

    @property
    def total(self) -> float:
        return float(np.sum(self.masses))

    def cdf(self, t) -> np.ndarray:
        """Normalized CDF, linear inside each bin."""
        c = np.concatenate([[0.0], np.cumsum(self.masses)]) / self.total
        return np.interp(np.asarray(t, dtype=float), self.edges, c)

    def smoothed(self, width: int = 3) -> "DensityProfile":
        """Boxcar-smoothed masses (mass preserving); flagged in ``meta``."""
        if width < 1 or width % 2 == 0:
            raise ValueError("boxcar width must be a positive odd integer")
        k = np.ones(width) / width
        m = np.convolve(np.pad(self.masses, width // 2, mode="edge"), k, mode="valid")
        m *= self.total / np.sum(m)
        return DensityProfile(self.lam, self.support, self.edges, m, self.method,
                              {**self.meta, "smoothing": f"boxcar{width}"})


MIN_BINS = 8


def pushforward_density(w, lam: float, grid: SphereGrid | None = None, bins: int = 64,
                        method: str = "grid", law: AreaLaw | None = None) -> DensityProfile:
    """Density of the image of the symplectic measure under ``w``.

    Bin masses are differences of the area function at the bin edges, so the
    density integrates to the total area exactly. The support comes from the
    refined extrema of ``w``.

    Raises
    ------
    ValueError
        For ``bins < 8``, a grid at another level, or constant ``w``.
    """
    if bins < MIN_BINS:
        raise ValueError(f"bins must be at least {MIN_BINS}")
    f = as_sphere_function(w, lam)
    if method == "grid":
        grid = grid or SphereGrid(lam)
        if abs(grid.lam - lam) > 1e-14 * lam:
            raise ValueError("grid level does not match lambda")
        lo_cp, hi_cp = sphere_extrema(f)
        a, b = lo_cp.value, hi_cp.value
        _check_width(a, b)
        edges = np.linspace(a, b, bins + 1)
        A = grid_sublevel_areas(f, lam, grid, edges)
        A[-1] = grid.total_weight
        meta = {"grid": [grid.n3, grid.ntheta]}
    elif method == "orbit":
        law = law or AreaLaw.build(f, lam)
        a, b = law.a, law.b
        _check_width(a, b)
        edges = np.linspace(a, b, bins + 1)
        A = law.area(edges)
        meta = {"chebyshev_nodes": len(law.rho_u.coef), "mass_error": law.mass_error}
    else:
        raise ValueError(f"unknown method {method!r}")
    return DensityProfile(float(lam), (float(a), float(b)), edges, np.diff(A), method, meta)


def _check_width(a: float, b: float):
    if not b - a > 1e-13 * max(1.0, abs(a), abs(b)):
        raise ValueError("function is constant on the sphere (zero-width support)")


def area_function(w, lam: float, grid: SphereGrid | None = None, method: str = "grid",
                  samples: int = 1025) -> MonotoneMap:
    """``A(t) = Area{w < t}`` as a monotone map from levels to areas."""
    f = as_sphere_function(w, lam)
    if method == "orbit":
        return AreaLaw.build(f, lam).to_monotone_map(samples)
    if method != "grid":
        raise ValueError(f"unknown method {method!r}")
    grid = grid or SphereGrid(lam)
    v0, v1, v2, mass, vals = _triangles(f, lam, grid)
    a, b = float(vals.min()), float(vals.max())
    _check_width(a, b)
    t = np.linspace(a, b, samples)
    A = kernels.sublevel_areas(v0, v1, v2, mass, t)
    A[0], A[-1] = 0.0, grid.total_weight
    return MonotoneMap(t, A, {"method": "grid", "lambda": lam, "grid": [grid.n3, grid.ntheta],
                              "support": [a, b]})


def phi_lambda(w, lam: float, method: str = "orbit", grid: SphereGrid | None = None) -> MonotoneMap:
    """Toric normalizer ``phi`` with ``phi' = rho`` and ``phi(min w) = 0``.

    The range is ``[0, 2 pi lam]``; ``phi / 2 pi`` generates a
    ``2 pi``-periodic flow.
    """
    return area_function(w, lam, grid=grid, method=method)
