import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oscbnf.parsing import NAMES, ParseError, parse_polynomial, parse_reduced
from oscbnf.polynomial import (H0, H01, H02, PX1, PX2, PX3, X1_P, XI1_P, X2_P, XI2_P,
                               OscillatorPolynomial, cohomological_solve_r4, moser_average,
                               non_invariant_terms, poisson_bracket, random_polynomial)
from oscbnf.reduced import BRACKET_SIGN, RX1, RX2, RX3, RLAM, lift, reduce
from oscbnf.reduced import NonInvariantError
from oscbnf.phase import h0_split, hopf_reduce, hopf_rotate, lift_point, random_sphere_points

seeds = st.integers(min_value=0, max_value=2 ** 32 - 1)


def _rand(seed, degree=3, invariant=False):
    return random_polynomial(np.random.default_rng(seed), degree, nterms=5, invariant=invariant)


def test_canonical_pairs():
    assert poisson_bracket(X1_P, XI1_P) == OscillatorPolynomial.constant(1)
    assert poisson_bracket(X2_P, XI2_P) == OscillatorPolynomial.constant(1)
    assert poisson_bracket(X1_P, X2_P).is_zero()
    assert poisson_bracket(XI1_P, X2_P).is_zero()


def test_oscillator_split():
    half = OscillatorPolynomial.constant(0.5)
    assert H01 == half * (X1_P ** 2 + XI1_P ** 2)
    assert H0 == H01 + H02
    assert PX3 == half * (H01 - H02)


def test_reduced_coordinates_close_su2():
    assert BRACKET_SIGN in (1, -1)
    s = OscillatorPolynomial.constant(BRACKET_SIGN)
    assert poisson_bracket(PX1, PX2) == s * PX3
    assert poisson_bracket(PX2, PX3) == s * PX1
    assert poisson_bracket(PX3, PX1) == s * PX2
    for X in (PX1, PX2, PX3):
        assert poisson_bracket(X, H0).is_zero()


def test_casimir():
    lhs = PX1 ** 2 + PX2 ** 2 + PX3 ** 2
    assert lhs == OscillatorPolynomial.constant(0.25) * H0 ** 2


@settings(max_examples=25, deadline=None)
@given(seeds, seeds)
def test_bracket_antisymmetric(a, b):
    f, g = _rand(a), _rand(b)
    assert poisson_bracket(f, g) == -poisson_bracket(g, f)


@settings(max_examples=15, deadline=None)
@given(seeds, seeds, seeds)
def test_jacobi_and_leibniz(a, b, c):
    f, g, h = _rand(a, 2), _rand(b, 2), _rand(c, 2)
    jac = (poisson_bracket(f, poisson_bracket(g, h)) + poisson_bracket(g, poisson_bracket(h, f))
           + poisson_bracket(h, poisson_bracket(f, g)))
    assert jac.is_zero()
    assert poisson_bracket(f, g * h) == poisson_bracket(f, g) * h + g * poisson_bracket(f, h)


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_average_is_invariant_and_idempotent(a):
    f = _rand(a, 4)
    avg = moser_average(f)
    assert poisson_bracket(avg, H0).is_zero()
    assert moser_average(avg) == avg
    assert not non_invariant_terms(avg)


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_cohomological_equation(a):
    f = _rand(a, 4)
    X, fave = cohomological_solve_r4(f)
    assert poisson_bracket(X, H0) == fave - f
    assert moser_average(X).is_zero()


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_reduce_lift_roundtrip(a):
    f = _rand(a, 4, invariant=True)
    assert lift(reduce(f)) == f


def test_reduce_rejects_non_invariant():
    with pytest.raises(NonInvariantError, match="not invariant"):
        reduce(X1_P)


def test_reduce_coordinates():
    assert reduce(PX1) == RX1 and reduce(PX2) == RX2 and reduce(PX3) == RX3
    assert reduce(H0) == RLAM


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_evaluation_matches_reduction(a):
    rng = np.random.default_rng(a)
    f = _rand(a, 4, invariant=True)
    y = rng.standard_normal((5, 4))
    lam, X = hopf_reduce(y)
    w = reduce(f)
    direct = np.real(f.evaluate(*y.T))
    via = w.evaluate(X[:, 0], X[:, 1], X[:, 2], lam)
    assert np.allclose(direct, via, rtol=1e-10, atol=1e-10)


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_json_roundtrip(a):
    f = _rand(a, 3)
    assert OscillatorPolynomial.from_json(f.to_json()) == f


def test_phase_space_helpers():
    rng = np.random.default_rng(0)
    X = random_sphere_points(rng, 1.3, 6)
    y = lift_point(1.3, X, rng.uniform(0, 6, 6))
    lam, X2 = hopf_reduce(y)
    assert np.allclose(lam, 1.3) and np.allclose(X, X2)
    h1, h2 = h0_split(y)
    assert np.allclose(h1 + h2, 1.3)
    assert np.allclose(hopf_reduce(hopf_rotate(y, 0.7))[1], X)


def test_parse_names_and_arithmetic():
    assert set(NAMES) >= {"x1", "xi1", "X3", "H0", "lambda"}
    assert parse_polynomial("H01 - 0.5*H0") == PX3
    assert parse_polynomial("(X1 + X2)^2") == (PX1 + PX2) ** 2
    assert parse_polynomial("x1**2/2") == OscillatorPolynomial.constant(0.5) * X1_P ** 2
    r = parse_reduced("X3 + 0.3*X1")
    assert r == RX3 + 0.3 * RX1


@pytest.mark.parametrize("text,token", [("X3 +* X1", "*"), ("X3 + foo", "foo"), ("(X1", "<end>"),
                                        ("X1 / X2", "/"), ("X1 ^ 1.5", "1.5")])
def test_parse_errors_name_token(text, token):
    with pytest.raises(ParseError) as info:
        parse_polynomial(text)
    assert token in str(info.value) or token in info.value.token
