"""Spherical harmonic transforms, spherical means and the magnetic examples.

Real orthonormal harmonics on the unit sphere are used throughout:
``Y_l^0`` is the complex harmonic, and for ``m > 0``
``Y_{l,m} = sqrt(2) (-1)^m Re Y_l^m`` and ``Y_{l,-m} = sqrt(2) (-1)^m Im Y_l^m``
with the Condon-Shortley phase of :func:`scipy.special.sph_harm_y`. With
this choice ``Y_{1,1}``, ``Y_{1,-1}`` and ``Y_{1,0}`` are positive multiples
of ``x``, ``y`` and ``z``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb, pi, sqrt
from typing import Callable

import numpy as np
from scipy.special import eval_legendre, sph_harm_y


# ---------------------------------------------------------------- harmonics


def real_sph_harm(l: int, m: int, polar, azimuth) -> np.ndarray:
    """Real orthonormal spherical harmonic ``Y_{l,m}``."""
    if abs(m) > l:
        raise ValueError("|m| must not exceed l")
    Y = sph_harm_y(l, abs(m), polar, azimuth)
    if m == 0:
        return np.real(Y)
    sign = -1.0 if abs(m) % 2 else 1.0
    return sqrt(2.0) * sign * (np.real(Y) if m > 0 else np.imag(Y))


def _angles(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    P = np.asarray(points, dtype=float)
    r = np.linalg.norm(P, axis=-1)
    polar = np.arccos(np.clip(P[..., 2] / r, -1.0, 1.0))
    azimuth = np.arctan2(P[..., 1], P[..., 0])
    return polar, azimuth


@dataclass(frozen=True)
class SphereQuadrature:
    """Gauss-Legendre in ``cos(polar)`` times uniform azimuth on the unit sphere."""

    n_polar: int
    n_azimuth: int

    def __post_init__(self):
        if self.n_polar < 1 or self.n_azimuth < 1:
            raise ValueError("quadrature needs at least one node per direction")

    @classmethod
    def for_degree(cls, L: int) -> "SphereQuadrature":
        return cls(2 * L + 2, 2 * L + 2)

    def nodes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(polar, azimuth, weight)`` arrays of shape ``(n_polar, n_azimuth)``."""
        x, w = np.polynomial.legendre.leggauss(self.n_polar)
        az = 2 * np.pi * np.arange(self.n_azimuth) / self.n_azimuth
        P, A = np.meshgrid(np.arccos(x), az, indexing="ij")
        W = np.repeat(w[:, None] * (2 * np.pi / self.n_azimuth), self.n_azimuth, axis=1)
        return P, A, W

    def points(self) -> np.ndarray:
        P, A, _ = self.nodes()
        return np.stack([np.sin(P) * np.cos(A), np.sin(P) * np.sin(A), np.cos(P)], axis=-1)


@dataclass(frozen=True, eq=False)
class SampledSphereFunction:
    """Values of a function at the nodes of a :class:`SphereQuadrature`."""

    grid: SphereQuadrature
    values: np.ndarray

    def integrate(self) -> float:
        _, _, W = self.grid.nodes()
        return float(np.sum(W * self.values))


@dataclass(frozen=True, eq=False)
class HarmonicExpansion:
    """Coefficients ``c[l, m + L]`` over real orthonormal harmonics up to degree ``L``."""

    L: int
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=float)
        if c.shape != (self.L + 1, 2 * self.L + 1):
            raise ValueError("coefficient array must have shape (L+1, 2L+1)")
        object.__setattr__(self, "coefficients", c)

    @classmethod
    def zeros(cls, L: int) -> "HarmonicExpansion":
        return cls(L, np.zeros((L + 1, 2 * L + 1)))

    @classmethod
    def single(cls, l: int, m: int, L: int | None = None, value: float = 1.0) -> "HarmonicExpansion":
        L = l if L is None else L
        c = np.zeros((L + 1, 2 * L + 1))
        c[l, m + L] = value
        return cls(L, c)

    @classmethod
    def random(cls, rng: np.random.Generator, L: int, degrees=None) -> "HarmonicExpansion":
        c = np.zeros((L + 1, 2 * L + 1))
        for l in (range(L + 1) if degrees is None else degrees):
            c[l, L - l:L + l + 1] = rng.standard_normal(2 * l + 1)
        return cls(L, c)

    def coefficient(self, l: int, m: int) -> float:
        return float(self.coefficients[l, m + self.L])

    def degree_block(self, l: int) -> np.ndarray:
        return self.coefficients[l, self.L - l:self.L + l + 1]

    def norm2(self) -> float:
        """Sum of squared coefficients (the surface ``L^2`` norm squared)."""
        return float(np.sum(self.coefficients ** 2))

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        polar, az = _angles(points)
        out = np.zeros(polar.shape)
        for l in range(self.L + 1):
            for m in range(-l, l + 1):
                c = self.coefficients[l, m + self.L]
                if c:
                    out += c * real_sph_harm(l, m, polar, az)
        return out

    def scale_degrees(self, factors: Callable[[int], float]) -> "HarmonicExpansion":
        c = self.coefficients.copy()
        for l in range(self.L + 1):
            c[l] *= factors(l)
        return HarmonicExpansion(self.L, c)


def analyze(f, L: int, grid: SphereQuadrature | None = None) -> HarmonicExpansion:
    """Project a sphere function onto harmonics of degree ``<= L``.

    Parameters
    ----------
    f : callable or SampledSphereFunction
        A callable takes unit vectors of shape ``(..., 3)``.

    Raises
    ------
    ValueError
        If the quadrature has fewer than ``2L + 2`` nodes in either direction.
    """
    if isinstance(f, SampledSphereFunction):
        grid, vals = f.grid, np.asarray(f.values, dtype=float)
    else:
        grid = grid or SphereQuadrature.for_degree(L)
        vals = None
    if grid.n_polar < 2 * L + 2 or grid.n_azimuth < 2 * L + 2:
        raise ValueError(f"quadrature {grid.n_polar}x{grid.n_azimuth} under-resolves degree {L}")
    P, A, W = grid.nodes()
    if vals is None:
        vals = np.asarray(f(grid.points()), dtype=float)
    fw = vals * W
    c = np.zeros((L + 1, 2 * L + 1))
    for l in range(L + 1):
        for m in range(-l, l + 1):
            c[l, m + L] = np.sum(fw * real_sph_harm(l, m, P, A))
    return HarmonicExpansion(L, c)


def synthesize(e: HarmonicExpansion, grid: SphereQuadrature | None = None) -> SampledSphereFunction:
    """Evaluate an expansion on a quadrature grid."""
    grid = grid or SphereQuadrature.for_degree(e.L)
    return SampledSphereFunction(grid, e.evaluate(grid.points()))


# ---------------------------------------------------------------- odd-degree multiplier


def r_multiplier(l: int) -> float:
    """Multiplier on degree ``l``: ``((2m+1)/2 pi) (-1)^m C(2m, m)/4^m`` for ``l = 2m+1``, else 0."""
    if l % 2 == 0:
        return 0.0
    m = (l - 1) // 2
    return (2 * m + 1) / (2 * pi) * (-1) ** m * float(Fraction(comb(2 * m, m), 4 ** m))


def r_transform(e: HarmonicExpansion) -> HarmonicExpansion:
    """Apply the odd-degree multiplier; even degrees are annihilated."""
    return e.scale_degrees(r_multiplier)


def r_asymptote(m: int) -> float:
    """Large-``m`` form ``(-1)^m sqrt(m) / pi^{3/2}`` of the degree-``2m+1`` multiplier."""
    return (-1) ** m * sqrt(m) / pi ** 1.5


def r_asymptotics_check(M: int) -> list[dict]:
    """Exact multiplier against its asymptote for ``m = 0..M``.

    Each row has ``m``, ``degree``, ``exact``, ``asymptote``, ``relative_gap``
    and ``sign_ok`` (the sign is ``(-1)^m``).
    """
    if M < 10:
        raise ValueError("M must be at least 10")
    rows = []
    for m in range(M + 1):
        ex = r_multiplier(2 * m + 1)
        asym = r_asymptote(m)
        rows.append({"m": m, "degree": 2 * m + 1, "exact": ex, "asymptote": asym,
                     "relative_gap": abs(ex - asym) / abs(ex),
                     "sign_ok": (ex > 0) == (m % 2 == 0)})
    return rows


# ---------------------------------------------------------------- spherical means


def _tangent_frames(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    ref = np.where(np.abs(X[:, 2:3]) < 0.9, np.array([[0.0, 0.0, 1.0]]), np.array([[1.0, 0.0, 0.0]]))
    e1 = np.cross(X, ref)
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    e2 = np.cross(X, e1)
    return e1, e2


def spherical_mean(f, r: float, points: np.ndarray, L: int = 16) -> np.ndarray:
    """Average of ``f`` over geodesic circles of radius ``r`` centred at ``points``.

    Each circle uses the trapezoid rule on ``4L + 4`` equally spaced nodes,
    which is exact for harmonics of degree below ``4L + 4``.

    Parameters
    ----------
    f : callable or HarmonicExpansion
        Function of unit vectors of shape ``(..., 3)``.
    """
    if not 0 < r < pi:
        raise ValueError("radius must lie in (0, pi)")
    func = f.evaluate if isinstance(f, HarmonicExpansion) else f
    X = np.atleast_2d(np.asarray(points, dtype=float))
    X = X / np.linalg.norm(X, axis=1, keepdims=True)
    e1, e2 = _tangent_frames(X)
    N = 4 * L + 4
    a = 2 * np.pi * np.arange(N) / N
    C = (np.cos(r) * X[:, None, :]
         + np.sin(r) * (np.cos(a)[None, :, None] * e1[:, None, :] + np.sin(a)[None, :, None] * e2[:, None, :]))
    vals = np.asarray(func(C), dtype=float)
    out = vals.mean(axis=1)
    return out if np.ndim(points) > 1 else out[0]


def mean_multiplier(n: int, r: float) -> float:
    """Legendre value ``P_n(cos r)``, the eigenvalue of the spherical mean on degree ``n``."""
    return float(eval_legendre(n, np.cos(r)))


# ---------------------------------------------------------------- magnetic examples


def magnetic_period(lam: float) -> float:
    """Period ``2 pi / sqrt(1 + 2 lam)`` of the magnetic orbits at energy ``lam``."""
    if lam < 0:
        raise ValueError("energy must be nonnegative")
    return 2 * pi / sqrt(1 + 2 * lam)


def magnetic_data(phi: float) -> tuple[float, float, float]:
    """``(p_theta, lam, T)`` of the circular orbit at polar angle ``phi``.

    ``p_theta = -sin^2(phi)/cos(phi)``, ``lam = tan^2(phi)/2`` and
    ``T = 2 pi cos(phi)``.
    """
    if not 0 < phi < pi / 2:
        raise ValueError("phi must lie in (0, pi/2)")
    c, s = np.cos(phi), np.sin(phi)
    return float(-s * s / c), float(0.5 * (s / c) ** 2), float(2 * pi * c)


def landau_levels(k: int, J: int) -> list[tuple[Fraction, int]]:
    """Exact ``((j + (k+1)/2)^2 - (k^2+1)/4, k + 2j + 1)`` for ``j = 0..J``."""
    if k < 1 or J < 0:
        raise ValueError("need k >= 1 and J >= 0")
    return [(Fraction(2 * j + k + 1, 2) ** 2 - Fraction(k * k + 1, 4), k + 2 * j + 1)
            for j in range(J + 1)]


def chi(lam: float) -> float:
    """``sqrt(1 + 2 lam)``, whose derivative is ``T(lam) / 2 pi``."""
    if lam < 0:
        raise ValueError("energy must be nonnegative")
    return sqrt(1 + 2 * lam)
