"""Phase points, the oscillator energies and the numerical Hopf map."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PhasePoint:
    """Point ``(x1, xi1, x2, xi2)`` of the four-dimensional phase space."""

    x1: float
    xi1: float
    x2: float
    xi2: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.xi1, self.x2, self.xi2], dtype=float)

    @classmethod
    def from_array(cls, y) -> "PhasePoint":
        y = np.asarray(y, dtype=float)
        return cls(*map(float, y))

    @property
    def z(self) -> tuple[complex, complex]:
        return complex(self.x1, self.xi1), complex(self.x2, self.xi2)


def _as_state(p) -> np.ndarray:
    if isinstance(p, PhasePoint):
        return p.as_array()
    y = np.asarray(p, dtype=float)
    if y.shape[-1] != 4:
        raise ValueError("phase points have four coordinates (x1, xi1, x2, xi2)")
    return y


def h0_split(p) -> tuple:
    """Partial energies ``(H01, H02)``; works on points or arrays of shape ``(..., 4)``."""
    y = _as_state(p)
    h1 = 0.5 * (y[..., 0] ** 2 + y[..., 1] ** 2)
    h2 = 0.5 * (y[..., 2] ** 2 + y[..., 3] ** 2)
    if y.ndim == 1:
        return float(h1), float(h2)
    return h1, h2


def hopf_reduce(p, min_energy: float = 0.0):
    """Level and reduced coordinates ``(lam, X)`` of a phase point.

    Raises
    ------
    ValueError
        If some input has ``H0 <= min_energy``.
    """
    y = _as_state(p)
    z1 = y[..., 0] + 1j * y[..., 1]
    z2 = y[..., 2] + 1j * y[..., 3]
    n1 = np.abs(z1) ** 2
    n2 = np.abs(z2) ** 2
    lam = 0.5 * (n1 + n2)
    if np.any(lam <= min_energy):
        raise ValueError("reduction requires H0 > 0")
    w = 0.5 * z1 * np.conj(z2)
    X = np.stack([w.real, w.imag, 0.25 * (n1 - n2)], axis=-1)
    if y.ndim == 1:
        return float(lam), X
    return lam, X


def lift_point(lam, X, psi=0.0) -> np.ndarray:
    """A phase point over ``X`` on the sphere of level ``lam``.

    ``psi`` moves the point along its Hopf circle by ``z -> exp(-i psi) z``,
    which is the time-``psi`` flow of ``H0``.
    """
    X = np.asarray(X, dtype=float)
    lam = np.asarray(lam, dtype=float)
    n1 = np.clip(lam + 2 * X[..., 2], 0.0, None)
    n2 = np.clip(lam - 2 * X[..., 2], 0.0, None)
    r1 = np.sqrt(n1)
    r2 = np.sqrt(n2)
    w = 2 * (X[..., 0] + 1j * X[..., 1])
    use2 = r2 >= r1
    with np.errstate(divide="ignore", invalid="ignore"):
        z1 = np.where(use2, w / np.where(use2, r2, 1.0), r1 + 0j)
        z2 = np.where(use2, r2 + 0j, np.conj(w) / np.where(use2, 1.0, r1))
    rot = np.exp(-1j * np.asarray(psi))
    z1 = z1 * rot
    z2 = z2 * rot
    return np.stack([z1.real, z1.imag, z2.real, z2.imag], axis=-1)


def hopf_rotate(y, alpha) -> np.ndarray:
    """Apply ``z_j -> exp(-i alpha) z_j`` to phase states."""
    y = _as_state(y)
    z1 = (y[..., 0] + 1j * y[..., 1]) * np.exp(-1j * np.asarray(alpha))
    z2 = (y[..., 2] + 1j * y[..., 3]) * np.exp(-1j * np.asarray(alpha))
    return np.stack([z1.real, z1.imag, z2.real, z2.imag], axis=-1)


def random_sphere_points(rng: np.random.Generator, lam: float, n: int) -> np.ndarray:
    """Uniform points on the sphere of radius ``lam/2``, shape ``(n, 3)``."""
    v = rng.normal(size=(n, 3))
    return 0.5 * lam * v / np.linalg.norm(v, axis=1, keepdims=True)
