"""Recovery of canonical forms from spectra.

Eigenvalue clusters around ``hbar (n+1)`` give rescaled shifts whose
empirical law converges to the pushforward of the reduced symbol. Quantiles
of the shifts therefore recover ``F2`` on the segment ``s + t = hbar (n+1)``,
and the same quantile matching applied to a normal-form lattice recovers the
quantum canonical form on a segment.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .measure import AreaLaw, DensityProfile, MonotoneMap
from .quantum import AssembledSpectrum, SyntheticSpectrum


@dataclass(frozen=True, eq=False)
class ShiftSample:
    """Sorted rescaled shifts of one cluster."""

    lam: float
    n: int
    shifts: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "shifts", np.sort(np.asarray(self.shifts, dtype=float)))

    @property
    def size(self) -> int:
        return self.shifts.size

    def cdf(self, x) -> np.ndarray:
        """Right-continuous empirical CDF."""
        return np.searchsorted(self.shifts, np.asarray(x, dtype=float), side="right") / self.size

    def quantile(self, q) -> np.ndarray:
        """Midpoint-convention quantile: sample ``i`` sits at fraction ``(i + 1/2) / N``."""
        q = np.asarray(q, dtype=float)
        pos = q * self.size - 0.5
        return np.interp(pos, np.arange(self.size), self.shifts)


def shifts_from_spectrum(eigs, hbar: float, n: int, c: float | None = None) -> ShiftSample:
    """Extract the cluster ``|E - hbar (n+1)| <= c hbar^2`` as rescaled shifts.

    Parameters
    ----------
    c : float, optional
        Cluster half-width in shift units. Defaults to just under half the
        spacing between clusters, ``0.499 / hbar``.

    Raises
    ------
    ValueError
        If the cluster does not contain exactly ``n + 1`` eigenvalues.
    """
    eigs = np.asarray(getattr(eigs, "eigenvalues", eigs), dtype=float)
    c = 0.499 / hbar if c is None else float(c)
    centre = hbar * (n + 1)
    mu = (eigs - centre) / hbar ** 2
    sel = mu[np.abs(mu) <= c]
    if sel.size != n + 1:
        raise ValueError(f"cluster n={n} holds {sel.size} eigenvalues, expected {n + 1} "
                         f"(half-width c={c:g})")
    return ShiftSample(centre, int(n), sel)


def cluster_halfwidth(w, lam: float) -> float:
    """``2 * sup |w|`` over the sphere, the default cluster half-width for a symbol."""
    from .spherefn import as_sphere_function, find_critical_points
    cps = find_critical_points(as_sphere_function(w, lam))
    return 2.0 * max(abs(c.value) for c in cps)


@dataclass(frozen=True, eq=False)
class RecoveredSlice:
    """Recovered ``s -> v(s)`` on ``[0, lam]`` with provenance.

    ``orientation`` is ``"increasing"`` when the data are consistent with
    ``v`` increasing in ``s`` and ``"decreasing"`` when the labelled data
    show the opposite; the quantile estimate itself is always increasing.
    ``reflection`` is the equally consistent candidate ``s -> v(lam - s)``
    coming from the ``s <-> t`` relabelling.
    """

    lam: float
    sample: np.ndarray
    provenance: dict = field(default_factory=dict)
    orientation: str = "increasing"

    def __call__(self, s) -> np.ndarray:
        s = np.clip(np.asarray(s, dtype=float), 0.0, self.lam)
        return self._quantile(s / self.lam)

    def _quantile(self, q):
        N = self.sample.size
        return np.interp(np.asarray(q) * N - 0.5, np.arange(N), self.sample)

    def reflection(self, s) -> np.ndarray:
        return self(self.lam - np.asarray(s, dtype=float))

    def jacobian(self, s, ds: float | None = None) -> np.ndarray:
        """Finite-difference derivative of the recovered slice."""
        ds = ds or self.lam / max(self.sample.size, 2)
        s = np.asarray(s, dtype=float)
        return (self(s + ds) - self(s - ds)) / (2 * ds)


def recover_f2(sample: ShiftSample) -> RecoveredSlice:
    """Empirical quantile of the shifts at fraction ``s / lam``."""
    if sample.size == 0:
        raise ValueError("empty shift sample")
    return RecoveredSlice(sample.lam, sample.shifts.copy(),
                          {"source": "cluster shifts", "n": sample.n, "lam": sample.lam})


class OrientationError(ValueError):
    """``v`` is not monotone along a lattice segment."""


def _segments(spec, width: float, u0: float) -> list[tuple[float, np.ndarray, np.ndarray | None]]:
    """``(u, v, k1)`` for each lattice segment with ``|u - u0| <= width``."""
    out = []
    if isinstance(spec, SyntheticSpectrum):
        hbar = spec.hbar
        # clusters from the energies alone: E ~ hbar * (n + 2 offset)
        n = np.rint(spec.energies / hbar - 2 * spec.offset).astype(int)
        for m in np.unique(n):
            u = hbar * (m + 2 * spec.offset)
            if abs(u - u0) <= width + 1e-12:
                sel = n == m
                v = (spec.energies[sel] - u) / hbar ** 2
                out.append((float(u), v, spec.k1[sel]))
    elif isinstance(spec, AssembledSpectrum):
        hbar = spec.hbar
        for m in spec.blocks():
            u = hbar * (m + 1)
            if abs(u - u0) <= width + 1e-12:
                out.append((float(u), spec.shifts[spec.n == m], None))
    else:
        raise TypeError("expected a synthetic or assembled spectrum")
    return out


def _orientation(v: np.ndarray, k1: np.ndarray, tol: float) -> str:
    dv = np.diff(v[np.argsort(k1)])
    up, down = np.any(dv > tol), np.any(dv < -tol)
    if up and down:
        return "mixed"
    return "decreasing" if down else "increasing"


def recover_g(spec, u0: float, width: float = 0.0, consistency_tol: float = 0.05) -> RecoveredSlice:
    """Recover the quantum canonical form on the segment ``s + t = u0``.

    The rescaled shifts on the segment closest to ``u0`` are sorted and read
    as quantiles at ``s / u0``. Segments within ``width`` are compared with
    each other to detect folding.

    Raises
    ------
    OrientationError
        If labelled data are non-monotone along a segment, or adjacent
        segments disagree by more than ``consistency_tol`` in quantile.
    ValueError
        If no segment lies within ``width`` of ``u0``.
    """
    segs = _segments(spec, max(width, 0.5 * spec.hbar), u0)
    if not segs:
        raise ValueError(f"no lattice segment within {width:g} of u0={u0:g}")
    segs.sort(key=lambda t: abs(t[0] - u0))
    u, v, k1 = segs[0]
    orient = "increasing"
    tol = 1e-12 * max(1.0, float(np.max(np.abs(v))))
    if k1 is not None:
        for _, vv, kk in segs:
            o = _orientation(vv, kk, tol)
            if o == "mixed":
                raise OrientationError(f"v is not monotone along the segment u={u:g}")
        orient = _orientation(v, k1, tol)
    q = np.linspace(0.1, 0.9, 33)
    base = RecoveredSlice(u, np.sort(v))
    for uu, vv, _ in segs[1:]:
        other = RecoveredSlice(uu, np.sort(vv))
        gap = float(np.max(np.abs(base._quantile(q) - other._quantile(q))))
        if gap > consistency_tol:
            raise OrientationError(f"quantiles at u={u:g} and u={uu:g} differ by {gap:.3g}")
    prov = {"source": type(spec).__name__, "u": u, "segments": len(segs),
            "reflection_ambiguous": True,
            "note": "recovered up to the relabelling s <-> t; see RecoveredSlice.reflection"}
    if isinstance(spec, SyntheticSpectrum):
        prov["offset"] = spec.offset
    return RecoveredSlice(u, np.sort(v), prov, orient)


# ---------------------------------------------------------------- Euler-Maclaurin


@dataclass(frozen=True)
class Bump:
    """Smooth bump ``exp(1 - 1/(1 - r^2))`` in the ``(u, v)`` plane, ``r = |p - centre| / radius``."""

    centre: tuple[float, float]
    radius: float

    def __call__(self, u, v) -> np.ndarray:
        r2 = ((np.asarray(u) - self.centre[0]) ** 2 + (np.asarray(v) - self.centre[1]) ** 2) / self.radius ** 2
        with np.errstate(divide="ignore", over="ignore"):
            return np.where(r2 < 1.0, np.exp(1.0 - 1.0 / (1.0 - np.minimum(r2, 1 - 1e-300))), 0.0)

    @property
    def u_support(self) -> tuple[float, float]:
        return self.centre[0] - self.radius, self.centre[0] + self.radius


def _gauss(n: int, a: float, b: float):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (a + b), 0.5 * (b - a) * w


def euler_maclaurin_check(spec: SyntheticSpectrum, f: Bump, nodes: int = 600
                          ) -> tuple[float, float, float]:
    """Compare ``hbar^2 sum f(u_k, v_k)`` with ``int f(s+t, G(s,t)) ds dt``.

    ``u_k`` and ``v_k`` come from the spectrum; the integral over the
    quadrant uses ``G = G2 + hbar G3`` and ``(u, s)`` coordinates with
    composite Gauss-Legendre rules.

    Raises
    ------
    ValueError
        If the bump's ``u``-support leaves the lattice window.
    """
    hbar = spec.hbar
    u_k = hbar * np.rint(spec.energies / hbar - 2 * spec.offset) + 2 * spec.offset * hbar
    lo, hi = f.u_support
    ulat = spec.u
    if lo < 0 or lo < ulat.min() - hbar or hi > ulat.max() + hbar * 0.5:
        raise ValueError(f"bump support [{lo:g}, {hi:g}] escapes the lattice window "
                         f"[{ulat.min():g}, {ulat.max():g}]")
    v_k = (spec.energies - u_k) / hbar ** 2
    lattice = hbar ** 2 * float(np.sum(f(u_k, v_k)))

    def G(s, t):
        return np.asarray(spec.G2(s, t), dtype=float) + hbar * np.asarray(spec.G3(s, t), dtype=float)

    # composite rule in u over the support, Gauss rule in s on [0, u]
    panels = 8
    edges = np.linspace(max(lo, 0.0), hi, panels + 1)
    xs, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        x, w = _gauss(nodes // panels, a, b)
        xs.append(x), ws.append(w)
    U, WU = np.concatenate(xs), np.concatenate(ws)
    xg, wg = np.polynomial.legendre.leggauss(nodes)
    S = 0.5 * U[:, None] * (xg[None, :] + 1)
    WS = 0.5 * U[:, None] * wg[None, :]
    vals = f(U[:, None], G(S, U[:, None] - S))
    integral = float(np.sum(WU[:, None] * WS * vals))
    return lattice, integral, abs(lattice - integral)


# ---------------------------------------------------------------- distances


def _law_cdf(density) -> Callable:
    if isinstance(density, DensityProfile):
        return density.cdf
    if isinstance(density, AreaLaw):
        return lambda x: density.area(x) / density.total
    if isinstance(density, MonotoneMap):
        lo, hi = density.range
        return lambda x: (np.clip(density(np.clip(x, *density.domain)), lo, hi) - lo) / (hi - lo)
    if isinstance(density, ShiftSample):
        return density.cdf
    if callable(density):
        return density
    raise TypeError("unsupported law")


def ks_distance(sample: ShiftSample, density) -> float:
    """Kolmogorov-Smirnov distance between the shifts and a reference law.

    ``density`` may be a :class:`DensityProfile`, an :class:`AreaLaw`, a
    :class:`MonotoneMap` area function, another :class:`ShiftSample` or a
    CDF callable.
    """
    x = sample.shifts
    N = x.size
    if isinstance(density, ShiftSample):
        pts = np.union1d(x, density.shifts)
        return float(np.max(np.abs(sample.cdf(pts) - density.cdf(pts))))
    F = np.asarray(_law_cdf(density)(x), dtype=float)
    # ties: compare against the CDF just before and at each distinct value
    uniq, first = np.unique(x, return_index=True)
    last = np.searchsorted(x, uniq, side="right")
    Fu = F[first]
    return float(max(np.max(last / N - Fu), np.max(Fu - first / N), 0.0))
