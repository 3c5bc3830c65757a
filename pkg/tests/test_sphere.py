import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oscbnf.sphere import (HarmonicExpansion, SphereQuadrature, analyze, chi, landau_levels,
                           magnetic_data, magnetic_period, mean_multiplier, r_asymptote,
                           r_asymptotics_check, r_multiplier, r_transform, real_sph_harm,
                           spherical_mean, synthesize)


def _unit(rng, n):
    P = rng.standard_normal((n, 3))
    return P / np.linalg.norm(P, axis=1, keepdims=True)


def test_degree_one_harmonics_are_coordinates():
    rng = np.random.default_rng(0)
    P = _unit(rng, 20)
    polar, az = np.arccos(P[:, 2]), np.arctan2(P[:, 1], P[:, 0])
    c = math.sqrt(3 / (4 * math.pi))
    assert np.allclose(real_sph_harm(1, 0, polar, az), c * P[:, 2])
    assert np.allclose(real_sph_harm(1, 1, polar, az), c * P[:, 0])
    assert np.allclose(real_sph_harm(1, -1, polar, az), c * P[:, 1])


def test_orthonormal_on_quadrature():
    L = 5
    grid = SphereQuadrature.for_degree(L)
    P, A, W = grid.nodes()
    Y = np.array([real_sph_harm(l, m, P, A).ravel() for l in range(L + 1) for m in range(-l, l + 1)])
    G = (Y * W.ravel()) @ Y.T
    assert np.allclose(G, np.eye(G.shape[0]), atol=1e-12)


def test_analyze_simple_inputs():
    e = analyze(lambda X: np.ones(X.shape[:-1]), 4)
    assert e.coefficient(0, 0) == pytest.approx(math.sqrt(4 * math.pi))
    assert np.sum(np.abs(e.coefficients)) == pytest.approx(math.sqrt(4 * math.pi))
    c = math.sqrt(3 / (4 * math.pi))
    z = analyze(lambda X: X[..., 2] * c, 4)
    assert z.coefficient(1, 0) == pytest.approx(1.0)
    with pytest.raises(ValueError, match="under-resolves"):
        analyze(lambda X: X[..., 0], 8, SphereQuadrature(6, 6))


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2 ** 31), st.integers(1, 10))
def test_round_trip_and_parseval(seed, L):
    e = HarmonicExpansion.random(np.random.default_rng(seed), L)
    f = synthesize(e)
    back = analyze(f, L)
    assert np.max(np.abs(back.coefficients - e.coefficients)) < 1e-10
    sq = float(np.sum(f.values ** 2 * f.grid.nodes()[2]))
    assert sq == pytest.approx(e.norm2(), rel=1e-8)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_r_transform_kills_even_part(seed):
    rng = np.random.default_rng(seed)
    L = 8
    even = HarmonicExpansion.random(rng, L, degrees=[0, 2, 4, 6, 8])
    assert r_transform(even).norm2() == 0.0
    e = HarmonicExpansion.random(rng, L)
    out = r_transform(e)
    for l in range(1, L + 1, 2):
        assert np.allclose(out.degree_block(l), r_multiplier(l) * e.degree_block(l))


def test_r_multiplier_values():
    assert r_multiplier(1) == pytest.approx(1 / (2 * math.pi))
    assert r_multiplier(3) == pytest.approx(-3 / (4 * math.pi))
    assert r_multiplier(4) == 0.0
    rows = r_asymptotics_check(10)
    assert len(rows) == 11 and rows[0]["exact"] == pytest.approx(1 / (2 * math.pi))
    assert r_asymptote(4) == pytest.approx(2 / math.pi ** 1.5)
    with pytest.raises(ValueError):
        r_asymptotics_check(9)


def test_spherical_mean_basics():
    rng = np.random.default_rng(2)
    P = _unit(rng, 10)
    one = spherical_mean(lambda X: np.ones(X.shape[:-1]), 0.8, P)
    assert np.allclose(one, 1.0)
    e = HarmonicExpansion.random(rng, 6)
    assert np.max(np.abs(spherical_mean(e, 1e-3, P) - e.evaluate(P))) < 1e-4
    assert mean_multiplier(3, 0.4) == pytest.approx(0.5 * (5 * math.cos(0.4) ** 3 - 3 * math.cos(0.4)))
    with pytest.raises(ValueError):
        spherical_mean(e, 0.0, P)


@pytest.mark.parametrize("r", [0.05, 0.1])
def test_small_means_keep_perfect_morse(r):
    from oscbnf.spherefn import CallableSphereFunction, find_critical_points

    def V(X):
        return X[..., 2] + 0.2 * X[..., 0]

    def MV(X):
        X = np.asarray(X, dtype=float)
        flat = X.reshape(-1, 3)
        return spherical_mean(V, r, flat, L=4).reshape(X.shape[:-1])

    cps = find_critical_points(CallableSphereFunction(MV, 1.0))
    assert [c.kind for c in cps] == ["min", "max"]


def test_magnetic_formulas():
    assert magnetic_period(0.0) == pytest.approx(2 * math.pi)
    assert magnetic_period(1.5) == pytest.approx(math.pi)
    p, lam, T = magnetic_data(math.pi / 4)
    assert p == pytest.approx(-1 / math.sqrt(2)) and lam == pytest.approx(0.5)
    assert T == pytest.approx(math.pi * math.sqrt(2))
    for phi in np.linspace(0.11, 1.39, 25):
        _, lam, T = magnetic_data(float(phi))
        assert abs(T - magnetic_period(lam)) < 1e-12
    with pytest.raises(ValueError):
        magnetic_data(1.6)


def test_chi():
    assert chi(0.0) == 1.0 and chi(4.0) == 3.0
    h = 1e-6
    d = (chi(1 + h) - chi(1 - h)) / (2 * h)
    assert abs(2 * math.pi * d - magnetic_period(1.0)) / magnetic_period(1.0) < 1e-6


def test_landau_examples():
    assert landau_levels(1, 0) == [(Fraction(1, 2), 2)]
    assert landau_levels(2, 0) == [(Fraction(1), 3)]
    with pytest.raises(ValueError):
        landau_levels(0, 3)
