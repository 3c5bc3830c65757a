import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oscbnf.bnf import (MomentMap, WindowError, f2_slice, f2_surface, level_set_connected,
                        local_window_match, moment_map_eval, morse_certify, quantile_oracle)
from oscbnf.chart import MonotonicityError, bnf_step, reduced_values, to_chart
from oscbnf.measure import (AreaLaw, MonotoneMap, NotPerfectMorseError, SphereGrid, area_function,
                            grid_sublevel_areas, phi_lambda, pushforward_density)
from oscbnf.parsing import parse_polynomial, parse_reduced
from oscbnf.phase import lift_point
from oscbnf.polynomial import random_polynomial
from oscbnf.reduced import RX3, ReducedPolynomial, reduce

TILTED = parse_reduced("X3 + 0.3*X1")


def test_monotone_map_roundtrip():
    x = np.linspace(0, 1, 50)
    m = MonotoneMap(x, x ** 3 + x)
    v = np.linspace(0.01, 1.99, 77)
    assert np.allclose(m(m.inverse(v)), v, atol=1e-13)
    with pytest.raises(ValueError):
        MonotoneMap([0, 1, 1], [0, 1, 2])


@pytest.mark.parametrize("lam", [0.4, 1.0, 2.5])
def test_area_of_height_function(lam):
    # Archimedes: the measure dX3 dtheta makes the area linear in the height
    t = np.linspace(-lam / 2, lam / 2, 11)
    law = AreaLaw.build(RX3, lam)
    assert np.allclose(law.area(t), 2 * np.pi * (t + lam / 2), atol=1e-10)
    grid = grid_sublevel_areas(RX3, lam, SphereGrid(lam, 64, 64), t)
    assert np.allclose(grid, 2 * np.pi * (t + lam / 2), atol=1e-12)


def test_area_law_mass_and_density():
    law = AreaLaw.build(TILTED, 1.0)
    assert law.mass_error < 1e-10
    t = np.linspace(law.a, law.b, 200)
    assert np.all(np.diff(law.area(t)) > 0)
    assert np.all(law.density(t[1:-1]) > 0)
    d = pushforward_density(TILTED, 1.0, method="orbit", law=law, bins=32)
    assert d.total == pytest.approx(2 * np.pi, rel=1e-10)
    assert d.cdf(law.b) == pytest.approx(1.0)


def test_grid_converges_to_orbit_method():
    w = parse_reduced("X1")
    law = AreaLaw.build(w, 1.0)
    t = np.linspace(-0.4, 0.4, 9)
    errs = [np.max(np.abs(grid_sublevel_areas(w, 1.0, SphereGrid(1.0, n, n), t) - law.area(t)))
            for n in (64, 128, 256)]
    assert errs[2] < errs[1] < errs[0]
    assert errs[0] / errs[2] > 3.0


def test_phi_lambda_range():
    m = phi_lambda(TILTED, 1.0)
    lo, hi = m.range
    assert lo == 0.0 and hi == pytest.approx(2 * np.pi)
    assert area_function(TILTED, 1.0, method="grid").range[1] == pytest.approx(2 * np.pi)


def test_certificates():
    assert morse_certify(TILTED, 1.0).perfect
    bad = morse_certify(parse_reduced("X1^2 - X3^2/2"), 1.0)
    assert not bad.perfect and bad.counts["saddle"] + bad.counts["degenerate"] > 0
    with pytest.raises(NotPerfectMorseError):
        f2_slice(parse_reduced("X1^2 - X3^2/2"), 1.0)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.2, 2.0), st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1))
def test_linear_symbols_depend_only_on_length(scale, a, b, c):
    norm = np.sqrt(a * a + b * b + c * c)
    if norm < 0.1:
        return
    lam = 1.0
    w = ReducedPolynomial({(1, 0, 0, 0): a, (0, 1, 0, 0): b, (0, 0, 1, 0): c})
    s = np.linspace(0, lam, 41)
    assert np.allclose(f2_slice(w, lam)(s), norm * (s - lam / 2), atol=1e-9)


def test_oracle_close_to_slice():
    q = np.linspace(0.1, 0.9, 17)
    diff = f2_slice(TILTED, 1.0).quantile(q) - quantile_oracle(TILTED, 1.0, q, n_samples=200_000)
    assert np.max(np.abs(diff)) < 3e-3


def test_surface_interpolates_toric_case():
    surf = f2_surface(parse_polynomial("H01 - 0.5*H0"), [0.5, 0.75, 1.0, 1.25, 1.5])
    s, t = np.array([0.2, 0.4, 0.9]), np.array([0.5, 0.6, 0.3])
    assert np.allclose(surf(s, t), (s - t) / 2, atol=1e-10)
    with pytest.raises(ValueError, match="outside"):
        surf(2.0, 1.0)


def test_surface_names_failing_level():
    with pytest.raises(NotPerfectMorseError, match="level"):
        f2_surface(parse_polynomial("X1^2 - X3^2/2"), [1.0])


def test_local_window():
    lo, hi = local_window_match(RX3, 1.0, -0.1, 0.2)
    assert lo == pytest.approx(-0.1, abs=1e-9) and hi == pytest.approx(0.2, abs=1e-9)
    assert level_set_connected(TILTED, 1.0, 0.0)
    with pytest.raises((WindowError, ValueError)):
        local_window_match(parse_reduced("X1^2 - X3^2/2"), 1.0, -0.1, 0.1)


def test_moment_map():
    mm = MomentMap(parse_polynomial("X3"))
    north = lift_point(1.0, np.array([0.0, 0.0, 0.5]))
    equator = lift_point(1.0, np.array([0.5, 0.0, 0.0]))
    assert mm(north)[1] == pytest.approx(2 * np.pi)
    assert mm(equator)[1] == pytest.approx(np.pi)
    lam, phi = moment_map_eval(parse_polynomial("X3 + 0.3*X1"), equator)
    assert lam == pytest.approx(1.0) and 0 < phi < 2 * np.pi


def test_chart_matches_direct_values():
    w = reduce(random_polynomial(np.random.default_rng(5), 4, invariant=True))
    ch = to_chart(w, 1.3)
    X3 = np.linspace(-0.6, 0.6, 7)[:, None]
    th = np.linspace(0, 6, 9)[None, :]
    assert np.allclose(ch.evaluate(X3, th), reduced_values(w, 1.3)(X3, th), atol=1e-12)
    assert ch.is_real()


def test_normalization_step():
    H3 = random_polynomial(np.random.default_rng(9), 3, nterms=8)
    out = bnf_step(RX3, H3, [0.5, 1.0])
    assert max(out.residuals) < 1e-8
    for F3 in out.F3:
        assert F3.oscillating_part().max_abs() == 0.0
    with pytest.raises(MonotonicityError, match="lambda=1"):
        bnf_step(RX3 ** 2, random_polynomial(np.random.default_rng(1), 3, nterms=8), [1.0])
