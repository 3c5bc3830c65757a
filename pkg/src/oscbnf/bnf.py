"""Classical canonical form ``F2`` from area-function matching.

On the segment ``s + t = lam`` the canonical form is the quantile function
of the pushforward measure, ``F2(s, lam - s) = A_lam^{-1}(2 pi s)``, where
``A_lam`` is the area function of the reduced perturbation. The toric model
``X3`` has ``Area{X3 < c} = 2 pi (c + lam/2)``, which fixes the matching.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import ndimage
from scipy.interpolate import CubicSpline

from .measure import (
    AreaLaw, MonotoneMap, NotPerfectMorseError, SphereGrid, grid_sublevel_areas,
)
from .phase import hopf_reduce
from .polynomial import OscillatorPolynomial
from .reduced import ReducedPolynomial, reduce
from .spherefn import CriticalPoint, as_sphere_function, find_critical_points


@dataclass(frozen=True)
class MorseCertificate:
    """Critical points of a function on one reduced sphere and the verdict."""

    lam: float
    critical_points: tuple[CriticalPoint, ...]
    degenerate: bool

    @property
    def perfect(self) -> bool:
        return [c.kind for c in self.critical_points] == ["min", "max"]

    @property
    def counts(self) -> dict[str, int]:
        out = {"min": 0, "max": 0, "saddle": 0, "degenerate": 0}
        for c in self.critical_points:
            out[c.kind] += 1
        return out

    def summary(self) -> str:
        c = self.counts
        verdict = "perfect" if self.perfect else ("degenerate" if self.degenerate else "not perfect")
        return (f"lambda={self.lam:g}: {verdict} ({c['min']} min, {c['max']} max, "
                f"{c['saddle']} saddle, {c['degenerate']} degenerate)")


def morse_certify(w, lam: float, **kwargs) -> MorseCertificate:
    """Locate and classify all critical points of ``w`` on the sphere of level ``lam``.

    Degenerate critical points set the ``degenerate`` flag instead of raising.
    Keyword arguments go to :func:`oscbnf.spherefn.find_critical_points`.
    """
    f = as_sphere_function(w, lam)
    cps = tuple(find_critical_points(f, **kwargs))
    return MorseCertificate(float(lam), cps, any(c.kind == "degenerate" for c in cps))


def _reduced(w) -> ReducedPolynomial:
    if isinstance(w, OscillatorPolynomial):
        return reduce(w)
    return w


@dataclass(frozen=True, eq=False)
class BnfSlice:
    """``s -> F2(s, lam - s)`` on ``[0, lam]``.

    Evaluation goes through the spectral area law when present; ``map`` is
    the equivalent sampled monotone map used for serialization.
    """

    lam: float
    a: float
    b: float
    map: MonotoneMap
    law: AreaLaw | None = None
    certificate: MorseCertificate | None = None

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if self.law is not None:
            return self.law.inverse(2 * np.pi * np.clip(s, 0.0, self.lam))
        return self.map(s)

    def quantile(self, q):
        """``F2`` at fraction ``q = s / lam``."""
        return self(np.asarray(q, dtype=float) * self.lam)

    def samples(self, n: int = 101) -> tuple[np.ndarray, np.ndarray]:
        s = np.linspace(0.0, self.lam, n)
        return s, self(s)


def f2_slice(w, lam: float, method: str = "orbit", n_cheb: int = 32,
             grid: SphereGrid | None = None, samples: int = 513) -> BnfSlice:
    """Canonical form on the segment ``s + t = lam``.

    Parameters
    ----------
    w : ReducedPolynomial or OscillatorPolynomial
        Reduced perturbation, or an invariant phase-space polynomial.
    method : {"orbit", "grid"}
        Route to the area function (see :mod:`oscbnf.measure`).

    Raises
    ------
    NotPerfectMorseError
        With the certificate attached, when ``w`` is not perfect Morse.
    """
    w = _reduced(w)
    cert = morse_certify(w, lam)
    if not cert.perfect:
        raise NotPerfectMorseError(cert.summary(), cert)
    s = lam * 0.5 * (1 - np.cos(np.pi * np.arange(samples) / (samples - 1)))
    if method == "orbit":
        law = AreaLaw.build(w, lam, n_cheb=n_cheb, critical_points=list(cert.critical_points))
        F = law.inverse(2 * np.pi * s)
        F[0], F[-1] = law.a, law.b
        m = MonotoneMap(s, F, {"method": "orbit", "lambda": lam, "support": [law.a, law.b],
                               "normalization": "Phi(a)=0"})
        return BnfSlice(float(lam), law.a, law.b, m, law, cert)
    if method == "grid":
        from .measure import area_function
        A = area_function(w, lam, grid=grid, method="grid")
        F = A.inverse(2 * np.pi * s)
        a, b = cert.critical_points[0].value, cert.critical_points[-1].value
        F[0], F[-1] = a, b
        F = np.maximum.accumulate(F)
        keep = np.concatenate([[True], np.diff(F) > 0])
        m = MonotoneMap(s[keep], F[keep], {"method": "grid", "lambda": lam, "support": [a, b]})
        return BnfSlice(float(lam), a, b, m, None, cert)
    raise ValueError(f"unknown method {method!r}")


def quantile_oracle(w, lam: float, fractions, n_samples: int = 1_000_000,
                    seed: int = 0) -> np.ndarray:
    """Brute-force quantiles of ``w`` under the symplectic measure.

    Draws one uniform point in each cell of a ``(X3, theta)`` grid (jittered
    stratified sampling, equal weights), sorts the values and reads the
    weighted empirical quantile at each fraction.
    """
    f = as_sphere_function(_reduced(w) if not hasattr(w, "value") else w, lam)
    R = 0.5 * lam
    n3 = int(round(np.sqrt(n_samples / 2)))
    nth = n_samples // n3
    rng = np.random.default_rng(seed)
    i3 = (np.arange(n3)[:, None] + rng.random((n3, nth))) / n3
    it = (np.arange(nth)[None, :] + rng.random((n3, nth))) / nth
    X3 = -R + 2 * R * i3
    th = 2 * np.pi * it
    X = SphereGrid.cartesian(X3, th, R)
    v = np.sort(np.asarray(f.value(X), dtype=float).ravel())
    n = v.size
    pos = np.asarray(fractions, dtype=float) * n - 0.5
    return np.interp(pos, np.arange(n), v)


@dataclass(frozen=True, eq=False)
class BnfSurface:
    """Slices on a grid of levels with interpolation in ``lam``.

    ``F2(s, t)`` is interpolated by cubic splines in ``lam = s + t`` at fixed
    quantile fraction ``s / lam``.
    """

    lams: tuple[float, ...]
    slices: tuple[BnfSlice, ...]
    meta: dict = field(default_factory=dict)

    def __call__(self, s, t):
        s, t = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(t, dtype=float))
        lam = s + t
        lo, hi = self.lams[0], self.lams[-1]
        if np.any(lam < lo - 1e-12) or np.any(lam > hi + 1e-12):
            raise ValueError(f"levels outside the surface range [{lo:g}, {hi:g}]")
        q = np.where(lam > 0, s / np.where(lam > 0, lam, 1.0), 0.0)
        vals = np.stack([sl.quantile(q.ravel()) for sl in self.slices])  # (L, n)
        if len(self.lams) == 1:
            return vals[0].reshape(s.shape)
        out = np.empty(q.size)
        L = np.asarray(self.lams)
        for j in range(q.size):
            out[j] = CubicSpline(L, vals[:, j])(lam.ravel()[j])
        return out.reshape(s.shape)

    def endpoints(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array([sl.a for sl in self.slices]), np.array([sl.b for sl in self.slices])


def f2_surface(h2, lams: Sequence[float], **kwargs) -> BnfSurface:
    """Assemble slices of the canonical form over a level grid.

    Raises
    ------
    NotPerfectMorseError
        Naming the first level that fails certification.
    """
    if isinstance(h2, OscillatorPolynomial) and not h2.is_invariant():
        raise ValueError("h2 must be invariant under the oscillator flow")
    w = _reduced(h2)
    lams = sorted(float(l) for l in lams)
    if not lams:
        raise ValueError("empty level grid")
    slices = []
    for lam in lams:
        try:
            slices.append(f2_slice(w, lam, **kwargs))
        except NotPerfectMorseError as exc:
            raise NotPerfectMorseError(f"level {lam:g} fails certification: {exc}",
                                       exc.critical_points) from exc
    return BnfSurface(tuple(lams), tuple(slices), {"interpolation": "cubic in lambda at fixed s/lambda"})


# ---------------------------------------------------------------- local windows


class WindowError(ValueError):
    """A local window violates the regularity hypotheses."""


def _count_components(mask: np.ndarray, pole_lo: bool, pole_hi: bool) -> int:
    """Connected components of a node mask on the ``(X3, theta)`` grid of a sphere."""
    lab, n = ndimage.label(mask)
    if n == 0:
        return 0
    parent = list(range(n + 1))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i, j):
        if i and j:
            parent[find(i)] = find(j)

    for r in range(lab.shape[0]):
        union(lab[r, 0], lab[r, -1])
    for row, pole in ((0, pole_lo), (-1, pole_hi)):
        if pole:
            ids = [i for i in np.unique(lab[row]) if i]
            for i in ids[1:]:
                union(ids[0], i)
    return len({find(i) for i in range(1, n + 1)})


def level_set_connected(w, lam: float, level: float, grid: SphereGrid | None = None) -> bool:
    """Whether ``{w = level}`` is a single circle, by counting sub/superlevel components."""
    f = as_sphere_function(w, lam)
    grid = grid or SphereGrid(lam, 256, 256)
    v = np.asarray(f.value(grid.node_points()), dtype=float)
    sp = f.value(np.array([[0.0, 0.0, -grid.radius], [0.0, 0.0, grid.radius]]))
    below = v < level
    above = v > level
    n = (_count_components(below, sp[0] < level, sp[1] < level)
         + _count_components(above, sp[0] > level, sp[1] > level))
    return n == 2


def local_window_match(w, lam: float, a: float, b: float, grid: SphereGrid | None = None,
                       checks: int = 5) -> tuple[float, float]:
    """Toric window ``(c, d)`` matching the areas below ``a`` and ``b``.

    ``c = A(a) / 2 pi - lam / 2`` and ``d = A(b) / 2 pi - lam / 2``.

    Raises
    ------
    WindowError
        If a critical value lies in ``(a, b)``, a level set in the window is
        disconnected, or the window is outside the range of ``w``.
    """
    w = _reduced(w)
    f = as_sphere_function(w, lam)
    if not a < b:
        raise WindowError("window needs a < b")
    cert = morse_certify(w, lam)
    vals = [c.value for c in cert.critical_points]
    vmin, vmax = min(vals), max(vals)
    tol = 1e-12 * max(1.0, abs(vmin), abs(vmax))
    if a < vmin - tol or b > vmax + tol:
        raise WindowError(f"window [{a:g}, {b:g}] leaves the range [{vmin:g}, {vmax:g}]")
    inside = [v for v in vals if a + tol < v < b - tol]
    if inside:
        raise WindowError(f"critical value {inside[0]:.12g} lies inside the window")
    grid = grid or SphereGrid(lam, 512, 512)
    for m in np.linspace(a, b, checks + 2)[1:-1]:
        if not level_set_connected(f, lam, float(m), SphereGrid(lam, 256, 256)):
            raise WindowError(f"level set w={m:.6g} is disconnected")
    if a <= vmin + tol:
        Aa = 0.0
    else:
        Aa = float(grid_sublevel_areas(f, lam, grid, [a])[0])
    if b >= vmax - tol:
        Ab = 2 * np.pi * lam
    else:
        Ab = float(grid_sublevel_areas(f, lam, grid, [b])[0])
    return Aa / (2 * np.pi) - lam / 2, Ab / (2 * np.pi) - lam / 2


# ---------------------------------------------------------------- moment map


class MomentMap:
    """``p -> (H0(p), Phi(p))`` with ``Phi = A_{H0(p)}(W(p))``, ``Phi(min) = 0``.

    Area laws are cached per level. ``lam_range`` restricts admissible levels.
    """

    def __init__(self, h2, lam_range: tuple[float, float] | None = None, n_cheb: int = 32):
        if isinstance(h2, OscillatorPolynomial) and not h2.is_invariant():
            raise ValueError("h2 must be invariant under the oscillator flow")
        self.w = _reduced(h2)
        self.lam_range = lam_range
        self.n_cheb = n_cheb
        self._laws: dict[float, AreaLaw] = {}

    def law(self, lam: float) -> AreaLaw:
        key = float(lam)
        if key not in self._laws:
            cert = morse_certify(self.w, key)
            if not cert.perfect:
                raise NotPerfectMorseError(cert.summary(), cert)
            self._laws[key] = AreaLaw.build(self.w, key, self.n_cheb,
                                            critical_points=list(cert.critical_points))
        return self._laws[key]

    def __call__(self, p, lam_key: float | None = None) -> tuple[float, float]:
        lam, X = hopf_reduce(p)
        if self.lam_range is not None:
            lo, hi = self.lam_range
            if not lo - 1e-12 <= lam <= hi + 1e-12:
                raise ValueError(f"level {lam:g} outside [{lo:g}, {hi:g}]")
        key = lam if lam_key is None else lam_key
        law = self.law(key)
        val = float(self.w.evaluate_points(X, lam))
        return float(lam), float(law.area(val))


def moment_map_eval(h2, p, surface: BnfSurface | MomentMap | None = None) -> tuple[float, float]:
    """Evaluate ``(H0, Phi)`` at a phase point; ``Phi`` lies in ``[0, 2 pi H0]``."""
    if isinstance(surface, MomentMap):
        return surface(p)
    rng = None
    if isinstance(surface, BnfSurface):
        rng = (surface.lams[0], surface.lams[-1])
    return MomentMap(h2, rng)(p)
