"""Implicit-midpoint flows and the dynamical checks built on them.

Phase-space Hamiltonians are represented as ``F = Phi(P0, P1)`` with two
polynomials ``P0, P1`` and a tensor interpolant ``Phi`` (Lagrange in ``P0``,
Chebyshev in ``P1`` rescaled to a ``P0``-dependent interval). A plain
polynomial ``H`` is the case ``Phi(P0, P1) = P1``. The Hamilton field is
assembled by the chain rule inside the compiled kernel, so flows of the
toric normalizer ``Phi(H0, W) / 2 pi`` need no finite differences.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import golden

from . import kernels
from .bnf import _reduced, morse_certify
from .measure import AreaLaw, NotPerfectMorseError
from .phase import _as_state, hopf_reduce, hopf_rotate, lift_point, random_sphere_points
from .polynomial import H0, OscillatorPolynomial
from .reduced import lift
from .sphere import magnetic_data, magnetic_period


class IntegratorError(RuntimeError):
    """The implicit solve did not converge."""

    def __init__(self, message: str, step: int):
        super().__init__(message)
        self.step = step


def _poly_arrays(p: OscillatorPolynomial) -> tuple[np.ndarray, np.ndarray]:
    if not p.is_real():
        raise ValueError("Hamiltonians must be real-valued")
    exps, coefs = p.real_monomials
    if exps.size == 0:
        exps = np.zeros((1, 4), dtype=np.int_)
        coefs = np.zeros(1)
    return np.asarray(exps, dtype=np.int_).reshape(-1, 4), np.asarray(coefs, dtype=float)


def _poly_value(exps: np.ndarray, coefs: np.ndarray, y: np.ndarray) -> np.ndarray:
    y = np.atleast_2d(y)
    return np.sum(coefs[None, :] * np.prod(y[:, None, :] ** exps[None, :, :], axis=2), axis=1)


def _lagrange(nodes: np.ndarray, x: np.ndarray) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.ones((nodes.size, x.size))
    for l in range(nodes.size):
        for m in range(nodes.size):
            if m != l:
                out[l] *= (x - nodes[m]) / (nodes[l] - nodes[m])
    return out


@dataclass(frozen=True, eq=False)
class CompositeHamiltonian:
    """``F = Phi(P0, P1)`` with ``Phi`` tabulated as Chebyshev series per ``P0``-node.

    Attributes
    ----------
    T : ndarray, shape (L, N)
        Chebyshev coefficients of ``Phi(lam_l, .)`` in
        ``x = 2 (P1 - a_l) / (b_l - a_l) - 1``.
    """

    P0: OscillatorPolynomial
    P1: OscillatorPolynomial
    lam_nodes: np.ndarray
    a_nodes: np.ndarray
    b_nodes: np.ndarray
    T: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        T = np.atleast_2d(np.asarray(self.T, dtype=float))
        object.__setattr__(self, "T", T)
        for name in ("lam_nodes", "a_nodes", "b_nodes"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))
        if not (T.shape[0] == self.lam_nodes.size == self.a_nodes.size == self.b_nodes.size):
            raise ValueError("node arrays and coefficient rows must agree")
        if T.shape[0] > 16:
            raise ValueError("at most 16 interpolation levels are supported")
        e0, k0 = _poly_arrays(self.P0)
        e1, k1 = _poly_arrays(self.P1)
        dT = np.zeros_like(T)
        for l in range(T.shape[0]):
            d = C.chebder(T[l])
            dT[l, :d.size] = d
        object.__setattr__(self, "_arrays", (e0, k0, e1, k1, dT))

    @classmethod
    def from_polynomial(cls, h: OscillatorPolynomial) -> "CompositeHamiltonian":
        return cls(H0, h, [0.0], [-1.0], [1.0], [[0.0, 1.0]], {"kind": "polynomial"})

    def kernel_args(self):
        e0, k0, e1, k1, dT = self._arrays
        return e0, k0, e1, k1, self.lam_nodes, self.a_nodes, self.b_nodes, self.T, dT

    def value(self, y) -> np.ndarray:
        e0, k0, e1, k1, _ = self._arrays
        y = np.atleast_2d(_as_state(y))
        p0 = _poly_value(e0, k0, y)
        p1 = _poly_value(e1, k1, y)
        ell = _lagrange(self.lam_nodes, p0)
        a = self.a_nodes @ ell
        b = self.b_nodes @ ell
        x = 2 * (p1 - a) / (b - a) - 1
        vals = np.stack([C.chebval(x, self.T[l]) for l in range(self.T.shape[0])])
        return np.sum(ell * vals, axis=0)

    def field(self, y: np.ndarray) -> np.ndarray:
        from ._kernels_py import _composite_field
        return np.array(_composite_field(list(map(float, y)), *self.kernel_args()))


def _as_hamiltonian(h) -> CompositeHamiltonian:
    if isinstance(h, CompositeHamiltonian):
        return h
    if isinstance(h, OscillatorPolynomial):
        return CompositeHamiltonian.from_polynomial(h)
    raise TypeError("expected an OscillatorPolynomial or CompositeHamiltonian")


def _frequency(H: CompositeHamiltonian, y: np.ndarray) -> float:
    """Spectral radius of the Jacobian of the Hamilton field at ``y``."""
    eps = 1e-6 * max(1.0, float(np.max(np.abs(y))))
    J = np.empty((4, 4))
    for j in range(4):
        d = np.zeros(4)
        d[j] = eps
        J[:, j] = (H.field(y + d) - H.field(y - d)) / (2 * eps)
    return max(float(np.max(np.abs(np.linalg.eigvals(J)))), 1e-3)


def step_count(H, y0: np.ndarray, t: float, tol: float) -> int:
    """Steps for the implicit midpoint rule so the global error is about ``tol``.

    Uses the leading error ``t omega^3 h^2 / 12`` for a rotation of frequency
    ``omega``, with ``omega`` the largest Jacobian eigenvalue over the
    starting points.
    """
    H = _as_hamiltonian(H)
    y0 = np.atleast_2d(y0)
    omega = max(_frequency(H, y) for y in y0)
    scale = max(1.0, float(np.max(np.abs(y0))))
    h = math.sqrt(12.0 * tol * scale / (abs(t) * omega ** 3 + 1e-300))
    return max(1, int(math.ceil(abs(t) / h)))


@dataclass(frozen=True, eq=False)
class FlowResult:
    """Outcome of one or more trajectories.

    ``initial`` and ``final`` have shape ``(4,)`` or ``(nb, 4)``. For torus
    checks ``alpha`` holds the fitted Hopf angles and ``residual`` the
    distance left after rotating back.
    """

    initial: np.ndarray
    final: np.ndarray
    time: float
    steps: int
    step_size: float
    energy_drift: np.ndarray
    iterations: int
    alpha: np.ndarray | None = None
    residual: np.ndarray | None = None

    @property
    def return_error(self) -> np.ndarray:
        d = np.atleast_2d(self.final) - np.atleast_2d(self.initial)
        return np.linalg.norm(d, axis=1)


def integrate(field_, p0, t: float, tol: float = 1e-8, steps: int | None = None,
              solve_tol: float = 1e-15, max_iter: int = 100) -> FlowResult:
    """Implicit-midpoint flow of a Hamiltonian for time ``t``.

    Parameters
    ----------
    field_ : OscillatorPolynomial or CompositeHamiltonian
    p0 : array_like, shape (4,) or (nb, 4)
    tol : float
        Target global error, in ``(1e-14, 1e-3)``; fixes the step.
    steps : int, optional
        Explicit step count, overriding ``tol``.

    Raises
    ------
    IntegratorError
        If a fixed-point solve fails, with the step index.
    """
    if not 1e-14 < tol < 1e-3:
        raise ValueError("tol must lie in (1e-14, 1e-3)")
    H = _as_hamiltonian(field_)
    y0 = np.asarray(_as_state(p0), dtype=float)
    Y0 = np.atleast_2d(y0)
    n = steps or step_count(H, Y0, t, tol)
    h = t / n
    out, worst, failed = kernels.midpoint_composite(Y0, h, n, *H.kernel_args(), solve_tol, max_iter)
    if failed >= 0:
        raise IntegratorError(f"implicit solve did not converge at step {failed}", failed)
    drift = np.abs(H.value(out) - H.value(Y0))
    final = out if y0.ndim == 2 else out[0]
    return FlowResult(y0, final, float(t), int(n), float(h),
                      drift if y0.ndim == 2 else drift[:1], int(worst))


# ---------------------------------------------------------------- torus action


def toric_hamiltonian(h2, lams, n_cheb: int = 32) -> CompositeHamiltonian:
    """``Phi(H0, W) / 2 pi`` from area laws at the levels ``lams``.

    ``Phi(lam, .)`` is the area function of ``W`` at level ``lam`` with
    ``Phi(min) = 0``; its flow over time ``2 pi`` closes every reduced orbit.

    Raises
    ------
    NotPerfectMorseError
        If some level fails certification.
    """
    w = _reduced(h2)
    lams = np.asarray(sorted(float(l) for l in lams))
    laws = []
    for lam in lams:
        cert = morse_certify(w, lam)
        if not cert.perfect:
            raise NotPerfectMorseError(f"level {lam:g} fails certification: {cert.summary()}", cert)
        laws.append(AreaLaw.build(w, lam, n_cheb, critical_points=list(cert.critical_points)))
    N = max(len(l.area_u.coef) for l in laws)
    T = np.zeros((lams.size, N))
    for i, law in enumerate(laws):
        c = law.phi_chebyshev()
        T[i, :c.size] = c
    return CompositeHamiltonian(H0, lift(w), lams, [l.a for l in laws], [l.b for l in laws], T,
                                {"kind": "toric", "normalization": "Phi(a)=0, divided by 2 pi",
                                 "mass_error": max(l.mass_error for l in laws)})


def fit_hopf_angle(final: np.ndarray, target: np.ndarray, scan: int = 64) -> tuple[float, float]:
    """Angle ``alpha`` in ``[0, 2 pi)`` minimizing ``|hopf_rotate(final, alpha) - target|``.

    A coarse scan brackets the minimum, golden-section search refines it and
    one Newton step on the squared distance finishes.
    """
    def dist2(a):
        d = hopf_rotate(final, a) - target
        return float(d @ d)

    grid = 2 * np.pi * np.arange(scan) / scan
    vals = [dist2(a) for a in grid]
    i = int(np.argmin(vals))
    step = 2 * np.pi / scan
    a = golden(dist2, brack=(grid[i] - step, grid[i], grid[i] + step), tol=1e-12)
    eps = 1e-5
    d1 = (dist2(a + eps) - dist2(a - eps)) / (2 * eps)
    d2 = (dist2(a + eps) - 2 * dist2(a) + dist2(a - eps)) / eps ** 2
    if d2 > 0:
        a -= d1 / d2
    a = float(np.mod(a, 2 * np.pi))
    return a, math.sqrt(max(dist2(a), 0.0))


@dataclass(frozen=True, eq=False)
class TorusReport:
    """Per-sample Hopf angles and residuals after one period of the toric flow."""

    levels: np.ndarray
    result: FlowResult
    alpha: np.ndarray
    residual: np.ndarray
    seconds: float
    meta: dict = field(default_factory=dict)

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residual))

    def alpha_spread(self) -> float:
        """Largest circular spread of ``alpha`` among samples sharing a level."""
        out = 0.0
        for lam in np.unique(self.levels):
            a = self.alpha[self.levels == lam]
            d = np.angle(np.exp(1j * (a - a[0])))
            out = max(out, float(np.ptp(d)))
        return out

    def alpha_table(self) -> list[tuple[float, float]]:
        return [(float(l), float(self.alpha[self.levels == l][0])) for l in np.unique(self.levels)]


def _stencil(lo: float, hi: float, n: int, spacing: float) -> np.ndarray:
    if hi - lo < 1e-12:
        return lo + spacing * (np.arange(n) - (n - 1) / 2)
    pad = spacing
    k = np.arange(n)
    return 0.5 * (lo + hi) - 0.5 * (hi - lo + 2 * pad) * np.cos(np.pi * (k + 0.5) / n)


def torus_action_check(h2, lam_window=(1.0, 1.0), samples: int = 16, levels: int = 1,
                       tol: float = 1e-8, seed: int = 0, n_nodes: int = 7,
                       node_spacing: float = 0.05, n_cheb: int = 32) -> TorusReport:
    """Flow ``Phi(H0, W) / 2 pi`` for time ``2 pi`` and fit the Hopf angle of each sample.

    Samples are spread evenly over ``levels`` energies in ``lam_window``, at
    random points of each reduced sphere and random Hopf phases.
    """
    lo, hi = map(float, lam_window)
    if lo <= 0 or hi < lo:
        raise ValueError("level window must satisfy 0 < lo <= hi")
    t0 = time.perf_counter()
    nodes = _stencil(lo, hi, n_nodes, node_spacing)
    if nodes.min() <= 0:
        raise ValueError("interpolation levels must stay positive")
    F = toric_hamiltonian(h2, nodes, n_cheb)
    rng = np.random.default_rng(seed)
    lv = np.linspace(lo, hi, levels) if levels > 1 else np.array([0.5 * (lo + hi)])
    per = np.full(lv.size, samples // lv.size)
    per[: samples - per.sum()] += 1
    lam_s = np.repeat(lv, per)
    X = np.concatenate([random_sphere_points(rng, l, k) for l, k in zip(lv, per)])
    psi = rng.uniform(0, 2 * np.pi, lam_s.size)
    Y0 = lift_point(lam_s, X, psi)
    res = integrate(F, Y0, 2 * np.pi, tol)
    alpha = np.empty(lam_s.size)
    resid = np.empty(lam_s.size)
    for i in range(lam_s.size):
        alpha[i], resid[i] = fit_hopf_angle(res.final[i], Y0[i])
    return TorusReport(lam_s, res, alpha, resid, time.perf_counter() - t0,
                       {"nodes": nodes.tolist(), "steps": res.steps, **F.meta})


# ---------------------------------------------------------------- magnetic orbits


def magnetic_energy(y: np.ndarray) -> np.ndarray:
    """``((P_theta + cos phi)^2 / sin^2 phi + p_phi^2) / 2``."""
    y = np.atleast_2d(y)
    q = y[:, 2] + np.cos(y[:, 1])
    return 0.5 * (q ** 2 / np.sin(y[:, 1]) ** 2 + y[:, 3] ** 2)


def _magnetic_field(y: np.ndarray) -> np.ndarray:
    y = np.atleast_2d(y)
    sp, cp = np.sin(y[:, 1]), np.cos(y[:, 1])
    q = y[:, 2] + cp
    return np.stack([q / sp ** 2, y[:, 3], np.zeros_like(q), q / sp + q * q * cp / sp ** 3], axis=1)


@dataclass(frozen=True)
class MagneticReport:
    phi0: float
    lam: float
    period: float
    predicted: float
    relative_error: float
    energy: float
    energy_drift: float
    steps: int


def magnetic_orbit_check(phi0: float, tol: float = 1e-10, periods: float = 1.25,
                         solve_tol: float = 1e-15, max_iter: int = 100) -> MagneticReport:
    """Integrate the magnetic geodesic flow from the circular-orbit initial data.

    Starts at ``theta = 0``, ``phi = phi0``, ``p_phi = 0`` with the kinetic
    ``p_theta`` of the circular orbit (canonical ``P_theta = p_theta -
    cos phi0``). The period is the first time ``theta`` has turned by
    ``2 pi`` with ``(phi, p_phi)`` back at their initial values.
    """
    if not 0.1 < phi0 < 1.4:
        raise ValueError("phi0 must lie in (0.1, 1.4); the chart degenerates near 0 and pi/2")
    p_theta, lam, T = magnetic_data(phi0)
    y0 = np.array([0.0, phi0, p_theta - math.cos(phi0), 0.0])
    omega = abs(_magnetic_field(y0)[0, 0]) + 1.0
    h = math.sqrt(12.0 * tol / (periods * T * omega ** 3))
    n = int(math.ceil(periods * T / h))
    h = periods * T / n
    traj, worst, failed = kernels.midpoint_magnetic(y0, h, n, solve_tol, max_iter)
    if failed >= 0:
        raise IntegratorError(f"implicit solve did not converge at step {failed}", failed)
    t = h * np.arange(traj.shape[0])
    turned = np.abs(traj[:, 0] - y0[0])
    k = int(np.searchsorted(turned, 2 * np.pi))
    if k == 0 or k >= traj.shape[0]:
        raise IntegratorError("theta did not complete a turn", n)
    sl = slice(max(k - 3, 0), min(k + 3, traj.shape[0]))
    spline = CubicHermiteSpline(t[sl], turned[sl],
                                np.sign(traj[sl, 0] - y0[0] + 1e-300) * _magnetic_field(traj[sl])[:, 0])
    roots = [r for r in spline.solve(2 * np.pi, extrapolate=False) if t[k - 1] - h <= r <= t[k] + h]
    period = float(roots[0])
    E = magnetic_energy(traj)
    back = np.hypot(np.interp(period, t, traj[:, 1]) - phi0, np.interp(period, t, traj[:, 3]))
    if back > 1e-6:
        raise IntegratorError(f"(phi, p_phi) did not return (gap {back:.2e})", k)
    pred = magnetic_period(lam)
    return MagneticReport(float(phi0), lam, period, pred, abs(period - pred) / pred,
                          float(E[0]), float(np.max(np.abs(E - E[0]))), n)
