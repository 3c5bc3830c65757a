import numpy as np
import pytest
from scipy.linalg import expm

from oscbnf import kernels
from oscbnf.flow import (CompositeHamiltonian, IntegratorError, fit_hopf_angle, integrate,
                         magnetic_energy, magnetic_orbit_check, toric_hamiltonian,
                         torus_action_check)
from oscbnf.parsing import parse_polynomial
from oscbnf.phase import hopf_rotate, lift_point, random_sphere_points
from oscbnf.polynomial import H0

J = np.array([[0, 1, 0, 0], [-1, 0, 0, 0], [0, 0, 0, 1], [0, 0, -1, 0]], dtype=float)


def _quadratic_matrix(h):
    """Symmetric ``S`` with ``h = y^T S y / 2`` for a quadratic polynomial."""
    H = CompositeHamiltonian.from_polynomial(h)
    S = np.empty((4, 4))
    I = np.eye(4)
    for i in range(4):
        for j in range(4):
            S[i, j] = (H.value((I[i] + I[j])[None]) - H.value(I[i][None]) - H.value(I[j][None]))[0]
    return S


def test_oscillator_returns_after_full_period():
    rng = np.random.default_rng(0)
    y0 = rng.standard_normal((3, 4))
    res = integrate(H0, y0, 2 * np.pi, tol=1e-9)
    assert np.max(np.abs(res.final - y0)) < 1e-8
    assert np.max(res.energy_drift) < 1e-12


def test_second_order_against_exponential():
    h = H0 + parse_polynomial("0.1*X1")
    S = _quadratic_matrix(h)
    y0 = np.array([0.3, -0.2, 0.5, 0.1])
    exact = expm(J @ S * 1.0) @ y0
    errs = [np.linalg.norm(integrate(h, y0, 1.0, steps=n).final - exact) for n in (100, 200)]
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.01)


def test_symplecticity_probe():
    h = H0 + parse_polynomial("0.2*X1^2 + 0.1*X3")
    rng = np.random.default_rng(3)
    y0 = rng.standard_normal(4) * 0.5
    u, v = rng.standard_normal(4), rng.standard_normal(4)
    eps = 1e-6

    def flow(y):
        return integrate(h, y, 1.0, steps=400).final

    base = flow(y0)
    du = (flow(y0 + eps * u) - base) / eps
    dv = (flow(y0 + eps * v) - base) / eps
    assert abs(du @ J @ dv - u @ J @ v) < 1e-5


def test_tolerance_bounds_and_failure():
    with pytest.raises(ValueError):
        integrate(H0, np.ones(4), 1.0, tol=1e-2)
    with pytest.raises(IntegratorError):
        integrate(H0 * 1e6, np.ones(4), 1.0, steps=1, max_iter=2)


def test_hopf_angle_fit():
    rng = np.random.default_rng(1)
    y = lift_point(1.0, random_sphere_points(rng, 1.0, 1), 0.4)[0]
    alpha, res = fit_hopf_angle(hopf_rotate(y, 2.1), y)
    assert np.angle(np.exp(1j * (alpha - 2.1))) == pytest.approx(0.0, abs=1e-10) or \
        np.angle(np.exp(1j * (alpha + 2.1))) == pytest.approx(0.0, abs=1e-10)
    assert res < 1e-10


def test_toric_flow_periodic_for_height():
    rep = torus_action_check(parse_polynomial("X3"), samples=4, tol=1e-10)
    assert rep.max_residual < 1e-8
    assert rep.alpha_spread() < 1e-8


def test_alpha_table_over_levels():
    rep = torus_action_check(parse_polynomial("X3 + 0.3*X1"), (0.8, 1.2), samples=10, levels=5, tol=1e-7)
    assert len(rep.alpha_table()) == 5
    assert rep.max_residual < 1e-5


def test_toric_hamiltonian_value_matches_area():
    from oscbnf.measure import AreaLaw
    from oscbnf.reduced import reduce
    h2 = parse_polynomial("X3 + 0.3*X1")
    F = toric_hamiltonian(h2, np.linspace(0.85, 1.15, 7))
    rng = np.random.default_rng(4)
    X = random_sphere_points(rng, 1.0, 5)
    y = lift_point(1.0, X, 0.0)
    law = AreaLaw.build(reduce(h2), 1.0)
    w = reduce(h2).evaluate(X[:, 0], X[:, 1], X[:, 2], 1.0)
    assert np.allclose(F.value(y), law.area(w) / (2 * np.pi), atol=1e-8)


@pytest.mark.parametrize("phi0", [0.2, np.pi / 4, 1.3])
def test_magnetic_orbits(phi0):
    rep = magnetic_orbit_check(phi0)
    assert rep.relative_error < 1e-6
    assert rep.energy == pytest.approx(0.5 * np.tan(phi0) ** 2, rel=1e-12)
    assert rep.energy_drift < 1e-8
    with pytest.raises(ValueError):
        magnetic_orbit_check(1.5)


def test_magnetic_energy_shape():
    y = np.array([[0.0, 0.5, -0.3, 0.1]])
    assert magnetic_energy(y).shape == (1,)


@pytest.mark.skipif(not kernels.HAVE_COMPILED, reason="compiled kernels not built")
def test_backends_agree():
    h = H0 + parse_polynomial("0.2*X1^2")
    y0 = np.array([[0.3, -0.2, 0.5, 0.1]])
    a = integrate(h, y0, 1.0, steps=50).final
    prev = kernels.set_backend("python")
    try:
        b = integrate(h, y0, 1.0, steps=50).final
        from oscbnf.measure import SphereGrid, grid_sublevel_areas
        from oscbnf.parsing import parse_reduced
        g = SphereGrid(1.0, 16, 16)
        t = np.linspace(-0.4, 0.4, 5)
        Ap = grid_sublevel_areas(parse_reduced("X1"), 1.0, g, t)
    finally:
        kernels.set_backend(prev)
    Ac = grid_sublevel_areas(parse_reduced("X1"), 1.0, g, t)
    assert np.allclose(a, b, atol=1e-14)
    assert np.allclose(Ap, Ac, atol=1e-13)
    assert kernels.BACKEND == prev
