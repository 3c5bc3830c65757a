"""Fourier chart on a reduced sphere and the homological equation.

In the chart ``X1 + i X2 = r exp(i theta)`` with ``r = sqrt((lam/2)^2 - X3^2)``
a function on the sphere is ``sum_k f_k(X3) exp(i k theta)``. Each mode is
stored as ``f_k = r^|k| u_k`` with ``u_k`` smooth, sampled on Chebyshev
extreme points in ``X3`` and evaluated by barycentric interpolation. For
polynomials the ``u_k`` are themselves polynomials, so the representation
is exact up to the node count.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from typing import Callable

import numpy as np
from scipy.interpolate import BarycentricInterpolator

from .polynomial import OscillatorPolynomial, moser_average, qqi_to_complex
from .reduced import BRACKET_SIGN, ReducedPolynomial, reduce

DEFAULT_NODES = 129


def chebyshev_nodes(lam: float, n: int = DEFAULT_NODES) -> np.ndarray:
    """Chebyshev extreme points mapped to ``[-lam/2, lam/2]``, ascending."""
    return -0.5 * lam * np.cos(np.pi * np.arange(n) / (n - 1))


def chart_radius(X3, lam: float):
    return np.sqrt(np.clip((0.5 * lam) ** 2 - np.asarray(X3) ** 2, 0.0, None))


@dataclass(frozen=True, eq=False)
class ChartField:
    """Function on one reduced sphere, by Fourier modes in ``theta``.

    Parameters
    ----------
    lam : float
        Level of the sphere (radius ``lam/2``).
    u : ndarray, shape (2K+1, N)
        Smooth factors ``u_k`` at the nodes, row ``k + K`` for mode ``k``.
    nodes : ndarray, shape (N,)
        ``X3`` sample points.
    """

    lam: float
    u: np.ndarray
    nodes: np.ndarray
    _interp: BarycentricInterpolator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        u = np.asarray(self.u, dtype=complex)
        if u.ndim != 2 or u.shape[0] % 2 != 1:
            raise ValueError("mode array must have shape (2K+1, N)")
        u.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "_interp", BarycentricInterpolator(self.nodes, u.T, axis=0))

    @property
    def K(self) -> int:
        return (self.u.shape[0] - 1) // 2

    @classmethod
    def zero(cls, lam: float, K: int = 0, n: int = DEFAULT_NODES) -> "ChartField":
        return cls(lam, np.zeros((2 * K + 1, n)), chebyshev_nodes(lam, n))

    @classmethod
    def from_x3(cls, h: Callable, lam: float, K: int = 0, n: int = DEFAULT_NODES) -> "ChartField":
        """Theta-independent field ``h(X3)``."""
        nodes = chebyshev_nodes(lam, n)
        u = np.zeros((2 * K + 1, n), dtype=complex)
        u[K] = h(nodes)
        return cls(lam, u, nodes)

    def with_K(self, K: int) -> "ChartField":
        if K < self.K:
            if np.any(np.abs(self.u[: self.K - K]) > 0) or np.any(np.abs(self.u[self.K + K + 1:]) > 0):
                raise ValueError("truncation would drop nonzero modes")
            return ChartField(self.lam, self.u[self.K - K: self.K + K + 1], self.nodes)
        pad = K - self.K
        return ChartField(self.lam, np.pad(self.u, ((pad, pad), (0, 0))), self.nodes)

    def _compatible(self, other: "ChartField") -> tuple["ChartField", "ChartField"]:
        if other.lam != self.lam or not np.array_equal(other.nodes, self.nodes):
            raise ValueError("chart fields live on different grids")
        K = max(self.K, other.K)
        return self.with_K(K), other.with_K(K)

    def __add__(self, other: "ChartField") -> "ChartField":
        a, b = self._compatible(other)
        return ChartField(self.lam, a.u + b.u, self.nodes)

    def __sub__(self, other: "ChartField") -> "ChartField":
        a, b = self._compatible(other)
        return ChartField(self.lam, a.u - b.u, self.nodes)

    def scale(self, c) -> "ChartField":
        return ChartField(self.lam, self.u * c, self.nodes)

    def multiply_x3(self, values: np.ndarray) -> "ChartField":
        """Multiply by a function of ``X3`` given by its node values."""
        return ChartField(self.lam, self.u * np.asarray(values)[None, :], self.nodes)

    def mode_factor(self, X3) -> np.ndarray:
        """Interpolated ``u_k(X3)``, shape ``(..., 2K+1)``."""
        X3 = np.asarray(X3, dtype=float)
        return self._interp(X3.ravel()).reshape(X3.shape + (self.u.shape[0],))

    def mode(self, k: int, X3) -> np.ndarray:
        """``f_k(X3) = r^|k| u_k(X3)``."""
        if abs(k) > self.K:
            return np.zeros_like(np.asarray(X3, dtype=complex))
        return chart_radius(X3, self.lam) ** abs(k) * self.mode_factor(X3)[..., k + self.K]

    def evaluate(self, X3, theta) -> np.ndarray:
        X3, theta = np.broadcast_arrays(np.asarray(X3, dtype=float), np.asarray(theta, dtype=float))
        fac = self.mode_factor(X3)
        r = chart_radius(X3, self.lam)
        ks = np.arange(-self.K, self.K + 1)
        phase = r[..., None] ** np.abs(ks) * np.exp(1j * ks * theta[..., None])
        return np.sum(fac * phase, axis=-1)

    def evaluate_points(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return self.evaluate(X[..., 2], np.arctan2(X[..., 1], X[..., 0]))

    def is_real(self, tol: float = 1e-12) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.u))))
        return bool(np.max(np.abs(self.u - np.conj(self.u[::-1]))) <= tol * scale)

    def theta_derivative(self) -> "ChartField":
        ks = np.arange(-self.K, self.K + 1)
        return ChartField(self.lam, self.u * (1j * ks)[:, None], self.nodes)

    def zero_mode(self) -> "ChartField":
        u = np.zeros_like(self.u)
        u[self.K] = self.u[self.K]
        return ChartField(self.lam, u, self.nodes)

    def oscillating_part(self) -> "ChartField":
        u = self.u.copy()
        u[self.K] = 0
        return ChartField(self.lam, u, self.nodes)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.u))) if self.u.size else 0.0


def _trig_modes(e1: int, e2: int) -> np.ndarray:
    """Fourier coefficients of ``cos^e1 sin^e2``, index ``k + e1 + e2``."""
    n = e1 + e2
    c = np.zeros(2 * n + 1, dtype=complex)
    # cos^e1 = 2^-e1 sum_a C(e1,a) E^(2a-e1); sin^e2 = (2i)^-e2 sum_b C(e2,b) (-1)^(e2-b) E^(2b-e2)
    for a in range(e1 + 1):
        for b in range(e2 + 1):
            k = (2 * a - e1) + (2 * b - e2)
            c[k + n] += comb(e1, a) * comb(e2, b) * (-1) ** (e2 - b)
    return c / (2 ** e1 * (2j) ** e2)


def to_chart(w: ReducedPolynomial, lam: float, K: int | None = None,
             n: int = DEFAULT_NODES) -> ChartField:
    """Exact Fourier decomposition of a reduced polynomial at level ``lam``.

    Raises
    ------
    ValueError
        If ``K`` is below the degree of ``w`` in ``(X1, X2)``.
    """
    deg = w.degree_x12
    if K is None:
        K = deg
    if K < deg:
        raise ValueError(f"K={K} is below the (X1, X2) degree {deg}")
    if n < 2 * w.degree + 2:
        raise ValueError("too few X3 nodes for an exact representation")
    nodes = chebyshev_nodes(lam, n)
    rsq = (0.5 * lam) ** 2 - nodes ** 2
    u = np.zeros((2 * K + 1, n), dtype=complex)
    for (e1, e2, e3, l), v in w.terms.items():
        c = qqi_to_complex(v) * lam ** l
        tm = _trig_modes(e1, e2)
        m = e1 + e2
        for idx, a in enumerate(tm):
            if a == 0:
                continue
            k = idx - m
            u[k + K] += c * a * nodes ** e3 * rsq ** ((m - abs(k)) // 2)
    return ChartField(lam, u, nodes)


class HomologicalError(ValueError):
    """The coefficient of the homological equation vanishes."""


def _profile_derivative(q, lam: float):
    if isinstance(q, ReducedPolynomial):
        prof = q.x3_profile(lam)
        d = prof.deriv()
        return prof, d
    if isinstance(q, tuple) and len(q) == 2:
        return q
    raise TypeError("q must be an X3-only ReducedPolynomial or a (h, dh) pair of callables")


def homological_solve_sphere(q, f: ChartField, check_points: int = 2001) -> tuple[ChartField, ChartField]:
    """Solve ``{q, g} = f - f0`` on one reduced sphere for ``q = h(X3)``.

    Since ``{X3, theta} = -s`` with ``s`` the recorded bracket sign, the
    equation reads ``-s h'(X3) dg/dtheta = f - f0`` and is solved mode by
    mode. ``f0`` is the theta-average of ``f``.

    Parameters
    ----------
    q : ReducedPolynomial or (callable, callable)
        Function of ``X3`` alone, or its values and derivative.
    f : ChartField

    Returns
    -------
    g, f0 : ChartField

    Raises
    ------
    HomologicalError
        If ``h'`` vanishes on ``[-lam/2, lam/2]``.
    """
    lam = f.lam
    if isinstance(q, ReducedPolynomial) and not q.depends_only_on_x3():
        raise HomologicalError("q must be a function of X3 alone")
    _, dh = _profile_derivative(q, lam)
    fine = np.linspace(-0.5 * lam, 0.5 * lam, check_points)
    dfine = np.real(np.asarray(dh(fine), dtype=complex))
    dnodes = np.asarray(dh(f.nodes), dtype=complex)
    scale = max(float(np.max(np.abs(dfine))), 1e-300)
    if np.min(np.abs(dfine)) <= 1e-10 * scale or np.any(np.sign(dfine) != np.sign(dfine[0])):
        x_bad = float(fine[int(np.argmin(np.abs(dfine)))])
        raise HomologicalError(f"h'(X3) vanishes near X3={x_bad:.6g} at level {lam:g}")
    ks = np.arange(-f.K, f.K + 1)
    div = np.where(ks == 0, 1.0, 1j * ks * (-BRACKET_SIGN))
    ug = f.u / dnodes[None, :] / div[:, None]
    ug[f.K] = 0.0
    return ChartField(lam, ug, f.nodes), f.zero_mode()


def homological_residual(q, g: ChartField, f_values: Callable, f0: ChartField,
                         n3: int = 41, ntheta: int = 64) -> float:
    """Sup-norm of ``{q, g} - (f - f0)`` on a test grid.

    The theta-derivative of ``g`` is taken spectrally from grid samples, and
    ``f_values(X3, theta)`` is evaluated independently of the chart modes.
    """
    lam = g.lam
    _, dh = _profile_derivative(q, lam)
    i = np.arange(1, n3 + 1)
    X3 = -0.5 * lam * np.cos(np.pi * (i - 0.5) / n3)
    theta = 2 * np.pi * np.arange(ntheta) / ntheta
    T3, TT = np.meshgrid(X3, theta, indexing="ij")
    gv = g.evaluate(T3, TT)
    k = np.fft.fftfreq(ntheta, d=1.0 / ntheta)
    dg = np.fft.ifft(1j * k[None, :] * np.fft.fft(gv, axis=1), axis=1)
    lhs = -BRACKET_SIGN * np.asarray(dh(T3)) * dg
    rhs = f_values(T3, TT) - f0.evaluate(T3, TT)
    return float(np.max(np.abs(lhs - rhs)))


def reduced_values(w: ReducedPolynomial, lam: float) -> Callable:
    """``(X3, theta) -> w`` evaluated through Cartesian coordinates."""
    def fn(X3, theta):
        r = chart_radius(X3, lam)
        return w.evaluate(r * np.cos(theta), r * np.sin(theta), X3, lam)
    return fn


class MonotonicityError(ValueError):
    """The canonical-form slice is not strictly monotone at some level."""

    def __init__(self, lam: float, detail: str):
        super().__init__(f"slice not strictly monotone at lambda={lam:g}: {detail}")
        self.lam = lam


@dataclass(frozen=True)
class BnfStepResult:
    """Per-level output of one normalization step.

    ``F3[i]`` is theta-free (a function of ``X3``, i.e. of the two partial
    energies on the level set) and ``G[i]`` is the generator at
    ``lams[i]``. ``residuals[i]`` is the homological residual sup-norm.
    """

    lams: tuple[float, ...]
    F3: tuple[ChartField, ...]
    G: tuple[ChartField, ...]
    residuals: tuple[float, ...]

    def F3_at(self, i: int, X3) -> np.ndarray:
        return self.F3[i].mode(0, X3)


def bnf_step(F2: ReducedPolynomial, H3: OscillatorPolynomial, lams,
             n: int = DEFAULT_NODES) -> BnfStepResult:
    """One normalization step against an ``X3``-only slice family ``F2``.

    For each level, solves ``{F2, G} = reduce(ave(H3)) - F3``.

    Raises
    ------
    MonotonicityError
        Reporting the first level where ``F2`` fails to be strictly monotone.
    """
    if not F2.depends_only_on_x3():
        raise ValueError("F2 must be written as a function of X3 and lambda")
    avg = moser_average(H3)
    w = reduce(avg)
    K = max(w.degree_x12, 1)
    F3s, Gs, res = [], [], []
    for lam in lams:
        lam = float(lam)
        f = to_chart(w, lam, K, n)
        try:
            g, f0 = homological_solve_sphere(F2, f)
        except HomologicalError as exc:
            raise MonotonicityError(lam, str(exc)) from exc
        F3s.append(f0)
        Gs.append(g)
        res.append(homological_residual(F2, g, reduced_values(w, lam), f0))
    return BnfStepResult(tuple(float(l) for l in lams), tuple(F3s), tuple(Gs), tuple(res))
