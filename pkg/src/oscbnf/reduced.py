"""Polynomials on the reduced spheres and the Hopf reduction map.

A reduced polynomial is a polynomial in ``X1, X2, X3`` whose coefficients
are polynomials in the level ``lambda``. On the sphere of level ``lambda``
the coordinates obey ``X1^2 + X2^2 + X3^2 = (lambda/2)^2``. The canonical
form eliminates ``X2^2`` with this relation, leaving ``X2`` of degree at
most one; the result is unique.
"""

from __future__ import annotations

import json
from functools import cached_property
from typing import Mapping

import numpy as np
import sympy
from sympy import Poly, QQ
from sympy.polys.domains import QQ_I

from .polynomial import (
    H0, PX1, PX2, PX3, CompiledPolynomial, OscillatorPolynomial, hopf_weight,
    poisson_bracket, qqi_from_strings, qqi_to_complex, qqi_to_strings, to_qqi,
)

SX1, SX2, SX3, LAM = sympy.symbols("X1 X2 X3 lambda")
# internal order puts X2 first so the Casimir relation is monic in it
_IGENS = (SX2, SX1, SX3, LAM)

RExponent = tuple[int, int, int, int]  # (e1, e2, e3, lambda power)


def _casimir_poly() -> Poly:
    return Poly.from_dict({(2, 0, 0, 0): QQ_I(1, 0), (0, 2, 0, 0): QQ_I(1, 0),
                           (0, 0, 2, 0): QQ_I(1, 0), (0, 0, 0, 2): QQ_I(QQ(-1, 4), 0)},
                          *_IGENS, domain=QQ_I)


_CASIMIR = _casimir_poly()


def _to_internal(k: RExponent) -> tuple[int, int, int, int]:
    e1, e2, e3, l = k
    return (e2, e1, e3, l)


class ReducedPolynomial:
    """Canonical polynomial on the family of reduced spheres.

    Terms are keyed by ``(e1, e2, e3, l)`` for ``X1^e1 X2^e2 X3^e3 lambda^l``
    with ``e2 <= 1`` after canonicalization.
    """

    __slots__ = ("_poly", "__dict__")

    def __init__(self, terms: Mapping[RExponent, object] | None = None):
        data = {}
        for k, v in (terms or {}).items():
            c = to_qqi(v)
            if c:
                key = _to_internal(tuple(int(e) for e in k))
                data[key] = data.get(key, QQ_I(0, 0)) + c
        poly = Poly.from_dict(data or {(0, 0, 0, 0): QQ_I(0, 0)}, *_IGENS, domain=QQ_I)
        self._poly = poly.rem(_CASIMIR)

    @classmethod
    def _wrap(cls, poly: Poly) -> "ReducedPolynomial":
        obj = cls.__new__(cls)
        obj._poly = poly.rem(_CASIMIR)
        return obj

    @classmethod
    def constant(cls, c) -> "ReducedPolynomial":
        return cls({(0, 0, 0, 0): c})

    @cached_property
    def terms(self) -> dict[RExponent, object]:
        raw = {}
        for (e2, e1, e3, l), v in self._poly.as_dict(native=True).items():
            if v:
                raw[(e1, e2, e3, l)] = v
        return {k: raw[k] for k in sorted(raw, key=lambda e: (sum(e[:3]), e))}

    def is_zero(self) -> bool:
        return not self.terms

    def is_real(self) -> bool:
        return all(v.y == 0 for v in self.terms.values())

    def depends_only_on_x3(self) -> bool:
        return all(e1 == 0 and e2 == 0 for (e1, e2, _, _) in self.terms)

    @property
    def degree_x12(self) -> int:
        """Largest total degree in ``(X1, X2)``."""
        return max((e1 + e2 for (e1, e2, _, _) in self.terms), default=0)

    @property
    def degree(self) -> int:
        return max((sum(k[:3]) for k in self.terms), default=0)

    def _other(self, other) -> Poly:
        if isinstance(other, ReducedPolynomial):
            return other._poly
        return Poly.from_dict({(0, 0, 0, 0): to_qqi(other)}, *_IGENS, domain=QQ_I)

    def __add__(self, other):
        try:
            return ReducedPolynomial._wrap(self._poly + self._other(other))
        except TypeError:
            return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        try:
            return ReducedPolynomial._wrap(self._poly - self._other(other))
        except TypeError:
            return NotImplemented

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return ReducedPolynomial._wrap(-self._poly)

    def __mul__(self, other):
        try:
            return ReducedPolynomial._wrap(self._poly * self._other(other))
        except TypeError:
            return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, ReducedPolynomial):
            return NotImplemented
        return ReducedPolynomial._wrap(self._poly.mul_ground(QQ_I.revert(to_qqi(other))))

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("polynomial powers must be non-negative integers")
        return ReducedPolynomial._wrap(self._poly ** n)

    def __eq__(self, other):
        if isinstance(other, ReducedPolynomial):
            return self.terms == other.terms
        try:
            return self.terms == ReducedPolynomial.constant(other).terms
        except TypeError:
            return NotImplemented

    def __hash__(self):
        return hash(tuple((k, qqi_to_strings(v)) for k, v in self.terms.items()))

    def __repr__(self):
        return f"ReducedPolynomial({self.to_sympy()})"

    def to_sympy(self) -> sympy.Expr:
        return self._poly.as_expr()

    def diff(self, var: str) -> "ReducedPolynomial":
        """Derivative of the polynomial representative in ``X1``, ``X2``, ``X3`` or ``lambda``.

        The result depends on the representative; ambient derivatives are only
        meaningful in combinations tangent to the sphere.
        """
        sym = {"X1": SX1, "X2": SX2, "X3": SX3, "lambda": LAM}[var]
        return ReducedPolynomial._wrap(self._poly.diff(sym))

    # numerics
    @cached_property
    def compiled(self) -> CompiledPolynomial:
        t = self.terms
        return CompiledPolynomial(list(t.keys()), [qqi_to_complex(v) for v in t.values()])

    @cached_property
    def _grad_compiled(self) -> tuple[CompiledPolynomial, ...]:
        return tuple(self.diff(v).compiled for v in ("X1", "X2", "X3"))

    @cached_property
    def _hess_compiled(self) -> tuple[tuple[CompiledPolynomial, ...], ...]:
        names = ("X1", "X2", "X3")
        return tuple(tuple(self.diff(a).diff(b).compiled for b in names) for a in names)

    def evaluate(self, X1, X2, X3, lam):
        val = self.compiled(X1, X2, X3, lam)
        return val.real if self.is_real() else val

    def evaluate_points(self, X: np.ndarray, lam: float):
        X = np.asarray(X, dtype=float)
        return self.evaluate(X[..., 0], X[..., 1], X[..., 2], lam)

    def gradient(self, X: np.ndarray, lam: float) -> np.ndarray:
        """Ambient gradient of the canonical representative, shape ``X.shape``."""
        X = np.asarray(X, dtype=float)
        parts = [c(X[..., 0], X[..., 1], X[..., 2], lam).real for c in self._grad_compiled]
        return np.stack(parts, axis=-1)

    def hessian(self, X: np.ndarray, lam: float) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        rows = [np.stack([c(X[..., 0], X[..., 1], X[..., 2], lam).real for c in row], axis=-1)
                for row in self._hess_compiled]
        return np.stack(rows, axis=-2)

    def x3_profile(self, lam: float):
        """For an ``X3``-only polynomial, return ``numpy.polynomial.Polynomial`` coefficients at ``lam``."""
        if not self.depends_only_on_x3():
            raise ValueError("polynomial depends on X1 or X2")
        deg = max((k[2] for k in self.terms), default=0)
        c = np.zeros(deg + 1, dtype=complex)
        for (_, _, e3, l), v in self.terms.items():
            c[e3] += qqi_to_complex(v) * lam ** l
        return np.polynomial.Polynomial(c.real if self.is_real() else c)

    # serialization
    def to_json_obj(self) -> dict:
        return {"kind": "reduced", "variables": ["X1", "X2", "X3", "lambda"],
                "terms": [{"exponents": list(k), "re": qqi_to_strings(v)[0],
                           "im": qqi_to_strings(v)[1]} for k, v in self.terms.items()]}

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), indent=1)

    @classmethod
    def from_json_obj(cls, obj: dict) -> "ReducedPolynomial":
        if obj.get("kind") != "reduced":
            raise ValueError("not a reduced polynomial document")
        return cls({tuple(t["exponents"]): qqi_from_strings(t["re"], t["im"])
                    for t in obj["terms"]})

    @classmethod
    def from_json(cls, text: str) -> "ReducedPolynomial":
        return cls.from_json_obj(json.loads(text))


RX1 = ReducedPolynomial({(1, 0, 0, 0): 1})
RX2 = ReducedPolynomial({(0, 1, 0, 0): 1})
RX3 = ReducedPolynomial({(0, 0, 1, 0): 1})
RLAM = ReducedPolynomial({(0, 0, 0, 1): 1})


class NonInvariantError(ValueError):
    """Raised when a reduction is requested for a non-invariant polynomial."""


def reduce(f: OscillatorPolynomial) -> ReducedPolynomial:
    """Descend a Hopf-invariant polynomial to the reduced spheres.

    Uses ``|z1|^2 = lambda + 2X3``, ``|z2|^2 = lambda - 2X3``,
    ``z1 zbar2 = 2(X1 + iX2)`` and ``zbar1 z2 = 2(X1 - iX2)``.

    Raises
    ------
    NonInvariantError
        Naming the first monomial with ``a + b != c + d``.
    """
    n1 = RLAM + 2 * RX3
    n2 = RLAM - 2 * RX3
    w = 2 * (RX1 + 1j * RX2)
    wbar = 2 * (RX1 - 1j * RX2)
    acc = ReducedPolynomial()
    for (a, b, c, d), v in f.terms.items():
        if hopf_weight((a, b, c, d)) != 0:
            raise NonInvariantError(
                f"monomial z1^{a} z2^{b} zbar1^{c} zbar2^{d} is not invariant under the oscillator flow")
        m1, m2 = min(a, c), min(b, d)
        p = a - m1  # power of z1 zbar2 (then c - m1 == 0 and b - m2 == 0)
        q = c - m1  # power of zbar1 z2
        term = ReducedPolynomial.constant(v) * n1 ** m1 * n2 ** m2 * w ** p * wbar ** q
        acc = acc + term
    return acc


def lift(r: ReducedPolynomial) -> OscillatorPolynomial:
    """Pull a reduced polynomial back to phase space (``lambda -> H0``)."""
    acc = OscillatorPolynomial()
    for (e1, e2, e3, l), v in r.terms.items():
        acc = acc + OscillatorPolynomial.constant(v) * PX1 ** e1 * PX2 ** e2 * PX3 ** e3 * H0 ** l
    return acc


def _compute_bracket_sign() -> int:
    b = poisson_bracket(PX1, PX2)
    if b == PX3:
        return 1
    if b == -PX3:
        return -1
    raise RuntimeError("reduced coordinates do not close under the bracket")


BRACKET_SIGN: int = _compute_bracket_sign()
"""Sign ``s`` in ``{X1, X2} = s X3``, computed from the phase-space bracket."""


def sphere_bracket_values(gradF: np.ndarray, gradG: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Lie-Poisson bracket ``s X . (grad F x grad G)`` at sampled points."""
    return BRACKET_SIGN * np.einsum("...i,...i->...", X, np.cross(gradF, gradG))
