"""Exact polynomial observables on the phase space of two oscillators.

Polynomials are stored in the complex coordinates ``z_j = x_j + i xi_j`` and
their conjugates, with exact Gaussian-rational coefficients. The Poisson
bracket is normalized by ``{x_j, xi_j} = 1``, which in these coordinates
reads ``{f, g} = -2i sum_j (f_{z_j} g_{zbar_j} - f_{zbar_j} g_{z_j})``.
"""

from __future__ import annotations

import json
from fractions import Fraction
from functools import cached_property
from numbers import Number
from typing import Iterable, Mapping

import numpy as np
import sympy
from sympy import Poly, QQ
from sympy.polys.domains import QQ_I

Z1, Z2, ZB1, ZB2 = sympy.symbols("z1 z2 zbar1 zbar2")
GENS = (Z1, Z2, ZB1, ZB2)
_X1, _XI1, _X2, _XI2 = sympy.symbols("x1 xi1 x2 xi2")
REAL_GENS = (_X1, _XI1, _X2, _XI2)

Exponent = tuple[int, int, int, int]


def to_qqi(c):
    """Convert a number to an exact Gaussian rational.

    Floats are read through their shortest decimal representation, so
    ``0.3`` becomes ``3/10`` rather than its binary expansion.
    """
    if isinstance(c, QQ_I.dtype):
        return c
    if isinstance(c, bool):
        c = int(c)
    if isinstance(c, int):
        return QQ_I(c, 0)
    if isinstance(c, Fraction):
        return QQ_I(QQ(c.numerator, c.denominator), 0)
    if isinstance(c, float):
        return to_qqi(Fraction(repr(c)))
    if isinstance(c, complex):
        re, im = to_qqi(c.real), to_qqi(c.imag)
        return QQ_I(re.x, im.x)
    if isinstance(c, sympy.Basic):
        return QQ_I.from_sympy(sympy.nsimplify(c, rational=True) if c.is_Float else c)
    if isinstance(c, Number):
        return to_qqi(complex(c))
    raise TypeError(f"cannot convert {c!r} to an exact coefficient")


def qqi_conj(c):
    return QQ_I(c.x, -c.y)


def qqi_to_complex(c) -> complex:
    return complex(float(c.x), float(c.y))


def qqi_to_strings(c) -> tuple[str, str]:
    return str(c.x), str(c.y)


def qqi_from_strings(re: str, im: str):
    a, b = Fraction(re), Fraction(im)
    return QQ_I(QQ(a.numerator, a.denominator), QQ(b.numerator, b.denominator))


class CompiledPolynomial:
    """Float evaluator for a fixed list of monomials.

    Parameters
    ----------
    exps : ndarray of int, shape (m, nv)
    coefs : ndarray of complex, shape (m,)
    """

    def __init__(self, exps, coefs):
        self.coefs = np.asarray(coefs, dtype=complex)
        self.exps = np.asarray(exps, dtype=np.int64).reshape(len(self.coefs), -1) if len(self.coefs) else np.zeros((0, 0), dtype=np.int64)

    def __call__(self, *xs):
        xs = np.broadcast_arrays(*[np.asarray(x) for x in xs])
        shape = xs[0].shape
        out = np.zeros(shape, dtype=complex)
        if self.coefs.size == 0:
            return out
        flat = [np.asarray(x, dtype=complex).ravel() for x in xs]
        acc = np.zeros(flat[0].size, dtype=complex)
        for row, c in zip(self.exps, self.coefs):
            term = np.full(flat[0].size, c, dtype=complex)
            for v, e in zip(flat, row):
                if e:
                    term = term * v ** int(e)
            acc += term
        return acc.reshape(shape)


class OscillatorPolynomial:
    """Polynomial in ``z1, z2, zbar1, zbar2`` with exact coefficients.

    Terms are keyed by exponent quadruples ``(a, b, c, d)`` of
    ``z1^a z2^b zbar1^c zbar2^d``. Zero coefficients are never stored.
    Instances are immutable and hashable.
    """

    __slots__ = ("_poly", "__dict__")

    def __init__(self, terms: Mapping[Exponent, object] | Poly | None = None):
        if isinstance(terms, Poly):
            poly = terms
        else:
            data = {}
            for k, v in (terms or {}).items():
                key = tuple(int(e) for e in k)
                if len(key) != 4 or min(key) < 0:
                    raise ValueError(f"bad exponent {k!r}")
                c = to_qqi(v)
                if c:
                    data[key] = data.get(key, QQ_I(0, 0)) + c
            poly = Poly.from_dict(data or {(0, 0, 0, 0): QQ_I(0, 0)}, *GENS, domain=QQ_I)
        self._poly = poly

    # construction helpers
    @classmethod
    def constant(cls, c) -> "OscillatorPolynomial":
        return cls({(0, 0, 0, 0): c})

    @classmethod
    def monomial(cls, exps: Exponent, c=1) -> "OscillatorPolynomial":
        return cls({tuple(exps): c})

    @classmethod
    def _wrap(cls, poly: Poly) -> "OscillatorPolynomial":
        obj = cls.__new__(cls)
        obj._poly = poly
        return obj

    # views
    @property
    def poly(self) -> Poly:
        return self._poly

    @cached_property
    def terms(self) -> dict[Exponent, object]:
        """Nonzero terms in canonical order (total degree, then lexicographic)."""
        raw = {k: v for k, v in self._poly.as_dict(native=True).items() if v}
        return {k: raw[k] for k in sorted(raw, key=lambda e: (sum(e), e))}

    def coefficient(self, exps: Exponent):
        return self.terms.get(tuple(exps), QQ_I(0, 0))

    def __iter__(self):
        return iter(self.terms.items())

    def __len__(self) -> int:
        return len(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def is_real(self) -> bool:
        t = self.terms
        return all(qqi_conj(v) == t.get((c, d, a, b), QQ_I(0, 0))
                   for (a, b, c, d), v in t.items())

    def is_invariant(self) -> bool:
        """True when every monomial satisfies ``a + b == c + d``."""
        return all(a + b == c + d for (a, b, c, d) in self.terms)

    def conjugate(self) -> "OscillatorPolynomial":
        return OscillatorPolynomial({(c, d, a, b): qqi_conj(v)
                                     for (a, b, c, d), v in self.terms.items()})

    # arithmetic
    def _other(self, other) -> Poly:
        if isinstance(other, OscillatorPolynomial):
            return other._poly
        return Poly.from_dict({(0, 0, 0, 0): to_qqi(other)}, *GENS, domain=QQ_I)

    def __add__(self, other):
        try:
            return OscillatorPolynomial._wrap(self._poly + self._other(other))
        except TypeError:
            return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        try:
            return OscillatorPolynomial._wrap(self._poly - self._other(other))
        except TypeError:
            return NotImplemented

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return OscillatorPolynomial._wrap(-self._poly)

    def __mul__(self, other):
        try:
            return OscillatorPolynomial._wrap(self._poly * self._other(other))
        except TypeError:
            return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, OscillatorPolynomial):
            return NotImplemented
        c = to_qqi(other)
        if not c:
            raise ZeroDivisionError("division of a polynomial by zero")
        return OscillatorPolynomial._wrap(self._poly.mul_ground(QQ_I.revert(c)))

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("polynomial powers must be non-negative integers")
        return OscillatorPolynomial._wrap(self._poly ** n)

    def __eq__(self, other):
        if isinstance(other, OscillatorPolynomial):
            return self.terms == other.terms
        try:
            return self.terms == OscillatorPolynomial.constant(other).terms
        except TypeError:
            return NotImplemented

    def __hash__(self):
        return hash(tuple((k, qqi_to_strings(v)) for k, v in self.terms.items()))

    def diff(self, var: int) -> "OscillatorPolynomial":
        """Derivative with respect to generator ``var`` (0..3 for z1, z2, zbar1, zbar2)."""
        return OscillatorPolynomial._wrap(self._poly.diff(GENS[var]))

    def __repr__(self):
        return f"OscillatorPolynomial({self.to_sympy()})"

    # conversions
    def to_sympy(self) -> sympy.Expr:
        return self._poly.as_expr()

    @cached_property
    def compiled(self) -> CompiledPolynomial:
        t = self.terms
        return CompiledPolynomial(list(t.keys()), [qqi_to_complex(v) for v in t.values()])

    def evaluate_z(self, z1, z2):
        """Evaluate at complex points; returns a complex array."""
        z1 = np.asarray(z1, dtype=complex)
        z2 = np.asarray(z2, dtype=complex)
        return self.compiled(z1, z2, np.conj(z1), np.conj(z2))

    def evaluate(self, x1, xi1, x2, xi2):
        """Evaluate at real phase points; real part for real polynomials."""
        z1 = np.asarray(x1) + 1j * np.asarray(xi1)
        z2 = np.asarray(x2) + 1j * np.asarray(xi2)
        val = self.evaluate_z(z1, z2)
        return val.real if self.is_real() else val

    @cached_property
    def real_monomials(self) -> tuple[np.ndarray, np.ndarray]:
        """Expansion in ``(x1, xi1, x2, xi2)`` as ``(exponents, float coefficients)``."""
        if not self.is_real():
            raise ValueError("real expansion requires a real-valued polynomial")
        subs = {Z1: _X1 + sympy.I * _XI1, Z2: _X2 + sympy.I * _XI2,
                ZB1: _X1 - sympy.I * _XI1, ZB2: _X2 - sympy.I * _XI2}
        expr = sympy.expand(self.to_sympy().subs(subs, simultaneous=True))
        rp = Poly(expr, *REAL_GENS, domain=QQ_I)
        items = [(k, v) for k, v in rp.as_dict(native=True).items() if v]
        if not items:
            return np.zeros((0, 4), dtype=np.int64), np.zeros(0)
        exps = np.array([k for k, _ in items], dtype=np.int64)
        coefs = np.array([float(v.x) for _, v in items])
        return exps, coefs

    # serialization
    def to_json_obj(self) -> dict:
        return {"kind": "oscillator", "variables": ["z1", "z2", "zbar1", "zbar2"],
                "terms": [{"exponents": list(k), "re": qqi_to_strings(v)[0],
                           "im": qqi_to_strings(v)[1]} for k, v in self.terms.items()]}

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), indent=1)

    @classmethod
    def from_json_obj(cls, obj: dict) -> "OscillatorPolynomial":
        if obj.get("kind") != "oscillator":
            raise ValueError("not an oscillator polynomial document")
        return cls({tuple(t["exponents"]): qqi_from_strings(t["re"], t["im"])
                    for t in obj["terms"]})

    @classmethod
    def from_json(cls, text: str) -> "OscillatorPolynomial":
        return cls.from_json_obj(json.loads(text))


def _lin(coefs: dict) -> OscillatorPolynomial:
    return OscillatorPolynomial(coefs)


HALF = Fraction(1, 2)
QUARTER = Fraction(1, 4)
ONE = OscillatorPolynomial.constant(1)
Z1_P = _lin({(1, 0, 0, 0): 1})
Z2_P = _lin({(0, 1, 0, 0): 1})
ZB1_P = _lin({(0, 0, 1, 0): 1})
ZB2_P = _lin({(0, 0, 0, 1): 1})
X1_P = _lin({(1, 0, 0, 0): HALF, (0, 0, 1, 0): HALF})
XI1_P = _lin({(1, 0, 0, 0): -0.5j, (0, 0, 1, 0): 0.5j})
X2_P = _lin({(0, 1, 0, 0): HALF, (0, 0, 0, 1): HALF})
XI2_P = _lin({(0, 1, 0, 0): -0.5j, (0, 0, 0, 1): 0.5j})
H01 = _lin({(1, 0, 1, 0): HALF})
H02 = _lin({(0, 1, 0, 1): HALF})
H0 = H01 + H02
# pullbacks of the reduced-sphere coordinates
PX1 = _lin({(1, 0, 0, 1): QUARTER, (0, 1, 1, 0): QUARTER})
PX2 = _lin({(1, 0, 0, 1): -0.25j, (0, 1, 1, 0): 0.25j})
PX3 = _lin({(1, 0, 1, 0): QUARTER, (0, 1, 0, 1): -QUARTER})

_MINUS_2I = QQ_I(0, -2)


def poisson_bracket(f: OscillatorPolynomial, g: OscillatorPolynomial) -> OscillatorPolynomial:
    """Poisson bracket with ``{x_j, xi_j} = 1``."""
    fp, gp = f.poly, g.poly
    acc = fp.diff(Z1) * gp.diff(ZB1) - fp.diff(ZB1) * gp.diff(Z1)
    acc += fp.diff(Z2) * gp.diff(ZB2) - fp.diff(ZB2) * gp.diff(Z2)
    return OscillatorPolynomial._wrap(acc.mul_ground(_MINUS_2I))


def hopf_weight(exps: Exponent) -> int:
    """``a + b - c - d``; the monomial is an eigenvector of ``{., H0}``
    with eigenvalue ``-i`` times this weight."""
    a, b, c, d = exps
    return a + b - c - d


def moser_average(f: OscillatorPolynomial) -> OscillatorPolynomial:
    """Average along the flow of ``H0``: keep monomials of zero Hopf weight."""
    return OscillatorPolynomial({k: v for k, v in f.terms.items() if hopf_weight(k) == 0})


def cohomological_solve_r4(f: OscillatorPolynomial) -> tuple[OscillatorPolynomial, OscillatorPolynomial]:
    """Solve ``{X, H0} = ave(f) - f`` with ``ave(X) = 0``.

    Returns
    -------
    X : OscillatorPolynomial
        Generator with no invariant part.
    fave : OscillatorPolynomial
        ``moser_average(f)``.
    """
    sol = {}
    for k, v in f.terms.items():
        nu = hopf_weight(k)
        if nu:
            # {m, H0} = -i nu m, so X_k = f_k / (i nu)
            sol[k] = v * QQ_I.revert(QQ_I(0, nu))
    return OscillatorPolynomial(sol), moser_average(f)


def non_invariant_terms(f: OscillatorPolynomial) -> list[Exponent]:
    return [k for k in f.terms if hopf_weight(k) != 0]


def random_polynomial(rng: np.random.Generator, degree: int, nterms: int = 6,
                      real: bool = True, invariant: bool = False,
                      denominator: int = 8) -> OscillatorPolynomial:
    """Random polynomial with small rational coefficients, for testing."""
    exps: list[Exponent] = []
    for d in range(degree + 1):
        for a in range(d + 1):
            for b in range(d + 1 - a):
                for c in range(d + 1 - a - b):
                    e = (a, b, c, d - a - b - c)
                    if not invariant or hopf_weight(e) == 0:
                        exps.append(e)
    pick = rng.choice(len(exps), size=min(nterms, len(exps)), replace=False)
    terms: dict = {}
    for i in pick:
        e = exps[int(i)]
        c = complex(Fraction(int(rng.integers(-denominator, denominator + 1)), denominator),
                    Fraction(int(rng.integers(-denominator, denominator + 1)), denominator))
        terms[e] = terms.get(e, 0) + c
    p = OscillatorPolynomial(terms)
    if real:
        p = (p + p.conjugate()) / 2
    return p


def sum_polynomials(items: Iterable[OscillatorPolynomial]) -> OscillatorPolynomial:
    acc = OscillatorPolynomial()
    for p in items:
        acc = acc + p
    return acc
