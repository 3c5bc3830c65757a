"""Acceptance suite: one test group per numbered criterion, at the stated tolerances."""

import math
import time
from fractions import Fraction

import numpy as np
import pytest
from scipy.special import eval_legendre

from oscbnf import (Bump, assemble_spectrum, euler_maclaurin_check, f2_slice, ks_distance,
                    parse_polynomial, recover_f2, recover_g, reduce, shifts_from_spectrum,
                    synth_lattice)
from oscbnf.bnf import morse_certify, quantile_oracle
from oscbnf.chart import homological_residual, homological_solve_sphere, reduced_values, to_chart
from oscbnf.flow import magnetic_orbit_check, torus_action_check
from oscbnf.measure import AreaLaw, SphereGrid
from oscbnf.polynomial import random_polynomial
from oscbnf.reduced import RX3, ReducedPolynomial
from oscbnf.sphere import (HarmonicExpansion, analyze, landau_levels, magnetic_period,
                           r_asymptotics_check, r_multiplier, r_transform,
                           spherical_mean, synthesize)

TORIC = "H01 - 0.5*H0"
TILTED = "X3 + 0.3*X1"


# ---------------------------------------------------------------- 1


@pytest.mark.criterion(1)
@pytest.mark.parametrize("method", ["grid", "orbit"])
def test_toric_slice_exact(method):
    h2 = parse_polynomial(TORIC)
    t0 = time.perf_counter()
    worst = 0.0
    for lam in (0.5, 1.0, 1.5):
        grid = SphereGrid(lam, 256, 256) if method == "grid" else None
        sl = f2_slice(h2, lam, method=method, grid=grid)
        s = np.linspace(0.0, lam, 2001)
        worst = max(worst, float(np.max(np.abs(sl(s) - (s - (lam - s)) / 2))))
    elapsed = time.perf_counter() - t0
    assert worst < 1e-6
    assert elapsed < 5.0


# ---------------------------------------------------------------- 2


@pytest.mark.criterion(2)
@pytest.mark.parametrize("lam", [0.5, 1.0, 2.0])
def test_rotated_symbol_same_slice(lam):
    s = np.linspace(0.0, lam, 1001)
    a = f2_slice(parse_polynomial("X1"), lam)(s)
    b = f2_slice(parse_polynomial("X3"), lam)(s)
    assert np.max(np.abs(a - b)) < 1e-4


# ---------------------------------------------------------------- 3


@pytest.mark.criterion(3)
def test_slice_matches_sampling_oracle():
    h2 = parse_polynomial(TILTED)
    t0 = time.perf_counter()
    sl = f2_slice(h2, 1.0)
    q = np.linspace(0.05, 0.95, 91)
    oracle = quantile_oracle(h2, 1.0, q, n_samples=1_000_000, seed=7)
    elapsed = time.perf_counter() - t0
    assert np.max(np.abs(sl.quantile(q) - oracle)) < 1e-3
    assert elapsed < 30.0


# ---------------------------------------------------------------- 4


@pytest.mark.criterion(4)
def test_szego_ks_decreasing():
    h2 = parse_polynomial(TILTED)
    w = reduce(h2)
    t0 = time.perf_counter()
    law = AreaLaw.build(w, 1.0)
    ns = [50, 100, 200, 400]
    ks = []
    for n in ns:
        hbar = 1.0 / (n + 1)
        spec = assemble_spectrum([h2], hbar, [n])
        ks.append(ks_distance(shifts_from_spectrum(spec, hbar, n), law))
    elapsed = time.perf_counter() - t0
    assert ks[ns.index(200)] < 0.05
    assert all(b < a for a, b in zip(ks, ks[1:])), ks
    assert elapsed < 60.0


# ---------------------------------------------------------------- 5


@pytest.mark.criterion(5)
def test_recover_f2_from_cluster():
    h2 = parse_polynomial(TILTED)
    n = 400
    hbar = 1.0 / (n + 1)
    sample = shifts_from_spectrum(assemble_spectrum([h2], hbar, [n]), hbar, n)
    rec = recover_f2(sample)
    q = np.linspace(0.1, 0.9, 161)
    truth = f2_slice(h2, sample.lam).quantile(q)
    assert np.max(np.abs(rec(q * rec.lam) - truth)) < 0.02


# ---------------------------------------------------------------- 6


@pytest.mark.criterion(6)
def test_recover_g_on_lattice():
    def G2(s, t):
        return s ** 2 + s * t

    hbar = 1.0 / 401
    spec = synth_lattice(G2, None, hbar, (395, 405))
    rec = recover_g(spec, 1.0)
    q = np.linspace(0.1, 0.9, 161)
    s = q * rec.lam
    assert np.max(np.abs(rec(s) - G2(s, rec.lam - s))) < 0.02
    assert rec.provenance["reflection_ambiguous"] is True
    refl = rec.reflection(s)
    assert np.allclose(refl, rec(rec.lam - s))


# ---------------------------------------------------------------- 7


def _em_gaps(G2, bump):
    gaps = []
    for hbar in (1 / 100, 1 / 200, 1 / 400):
        top = int(math.ceil(bump.u_support[1] / hbar)) + 2
        spec = synth_lattice(G2, None, hbar, (0, top), offset=0.5)
        gaps.append(euler_maclaurin_check(spec, bump)[2])
    return np.array(gaps)


@pytest.mark.criterion(7)
@pytest.mark.parametrize("G2,bump", [
    (lambda s, t: (s - t) / 2, Bump((1.0, 0.0), 0.7)),
    (lambda s, t: s ** 2 + s * t, Bump((1.0, 0.5), 0.6)),
], ids=["antisymmetric-linear", "quadratic"])
def test_euler_maclaurin_fourfold(G2, bump):
    gaps = _em_gaps(G2, bump)
    ratios = gaps[:-1] / gaps[1:]
    assert np.all(np.abs(ratios - 4.0) < 0.2), ratios


# ---------------------------------------------------------------- 8


def _certified_pairs(rng, count):
    pairs = []
    while len(pairs) < count:
        lam = float(rng.uniform(0.5, 2.0))
        c1, c3 = rng.uniform(0.5, 1.5), rng.uniform(-0.4, 0.4)
        # h(X3) = c1 X3 + c3 X3^3 / lam^2 has h' > 0 on [-lam/2, lam/2]
        q = ReducedPolynomial.constant(c1) * RX3 + ReducedPolynomial.constant(c3 / lam ** 2) * RX3 ** 3
        cert = morse_certify(q, lam)
        if not cert.perfect:
            continue
        f = reduce(random_polynomial(rng, 4, nterms=6, invariant=True))
        pairs.append((lam, q, f))
    return pairs


@pytest.mark.criterion(8)
def test_homological_solver_random_pairs():
    rng = np.random.default_rng(2024)
    for lam, q, f in _certified_pairs(rng, 20):
        fc = to_chart(f, lam)
        g, f0 = homological_solve_sphere(q, fc)
        assert homological_residual(q, g, reduced_values(f, lam), f0) < 1e-8
        X3 = np.linspace(-0.5 * lam, 0.5 * lam, 41)
        th = 2 * np.pi * np.arange(64) / 64
        T3, TT = np.meshgrid(X3, th, indexing="ij")
        v = f0.evaluate(T3, TT)
        assert np.max(np.abs(v - v[:, :1])) < 1e-10
        # independent theta-average of f by the trapezoid rule
        avg = reduced_values(f, lam)(T3, TT).mean(axis=1)
        assert np.max(np.abs(v[:, 0] - avg)) < 1e-10


# ---------------------------------------------------------------- 9


@pytest.mark.criterion(9)
def test_torus_action_returns():
    h2 = parse_polynomial(TILTED)
    t0 = time.perf_counter()
    rep = torus_action_check(h2, (1.0, 1.0), samples=16, tol=1e-8, seed=3)
    elapsed = time.perf_counter() - t0
    assert rep.max_residual < 1e-5
    assert rep.alpha_spread() < 1e-5
    assert elapsed < 60.0


# ---------------------------------------------------------------- 10


@pytest.mark.criterion(10)
def test_r_multiplier_closed_form():
    rng = np.random.default_rng(10)
    L = 21
    e = HarmonicExpansion.random(rng, L)
    out = r_transform(e)
    for l in range(L + 1):
        if l % 2 == 0:
            assert np.all(out.degree_block(l) == 0.0)
            continue
        m = (l - 1) // 2
        # (-1)^m C(2m, m) / 4^m equals the Legendre value P_{2m}(0)
        expected = (2 * m + 1) / (2 * math.pi) * eval_legendre(2 * m, 0.0)
        assert np.max(np.abs(out.degree_block(l) - expected * e.degree_block(l))) < 1e-10
        assert abs(r_multiplier(l) - expected) < 1e-10
    rows = r_asymptotics_check(50)
    assert rows[-1]["relative_gap"] < 0.05
    assert all(r["sign_ok"] for r in rows)
    z = HarmonicExpansion.single(1, 0, L=3)
    rz = r_transform(z)
    assert rz.coefficient(1, 0) == 1.0 / (2 * math.pi)
    assert rz.norm2() == pytest.approx(1.0 / (2 * math.pi) ** 2, rel=1e-15)


@pytest.mark.criterion(10)
def test_r_transform_through_quadrature():
    rng = np.random.default_rng(11)
    L = 9
    e = HarmonicExpansion.random(rng, L)
    back = analyze(synthesize(r_transform(e)), L)
    for l in range(L + 1):
        assert np.max(np.abs(back.degree_block(l) - r_multiplier(l) * e.degree_block(l))) < 1e-10


# ---------------------------------------------------------------- 11


def _north_pole_circle_mean(f, r, nodes=4096):
    a = 2 * np.pi * (np.arange(nodes) + 0.5) / nodes
    P = np.stack([np.sin(r) * np.cos(a), np.sin(r) * np.sin(a), np.full(nodes, np.cos(r))], axis=-1)
    return float(np.mean(f(P)))


@pytest.mark.criterion(11)
@pytest.mark.parametrize("r", [0.3, 0.7, 1.2])
def test_spherical_mean_multiplier(r):
    rng = np.random.default_rng(int(r * 10))
    P = rng.standard_normal((40, 3))
    P /= np.linalg.norm(P, axis=1, keepdims=True)
    north = np.array([[0.0, 0.0, 1.0]])
    for n in range(11):
        Yn = HarmonicExpansion.random(rng, n, degrees=[n])
        vals = Yn.evaluate(P)
        keep = np.abs(vals) > 1e-2 * np.max(np.abs(vals))
        ratio = spherical_mean(Yn, r, P[keep], L=max(n, 1)) / vals[keep]
        assert np.ptp(ratio) < 1e-8
        zonal = HarmonicExpansion.single(n, 0, L=n)
        oracle = _north_pole_circle_mean(zonal.evaluate, r) / zonal.evaluate(north)[0]
        assert abs(ratio.mean() - oracle) < 1e-8
    z = lambda X: X[..., 2]  # noqa: E731
    assert abs(spherical_mean(z, r, north, L=4)[0] - math.cos(r)) < 1e-8


# ---------------------------------------------------------------- 12


@pytest.mark.criterion(12)
def test_magnetic_period_law():
    for phi0 in np.linspace(0.15, 1.35, 10):
        rep = magnetic_orbit_check(float(phi0), tol=1e-10)
        assert abs(rep.period - magnetic_period(rep.lam)) / magnetic_period(rep.lam) < 1e-6
        assert rep.lam == pytest.approx(0.5 * math.tan(phi0) ** 2, rel=1e-14)


@pytest.mark.criterion(12)
def test_landau_table_exact():
    for k in range(1, 6):
        table = landau_levels(k, 10)
        assert len(table) == 11
        for j, (ev, mult) in enumerate(table):
            assert isinstance(ev, Fraction)
            assert ev == j * j + (k + 1) * j + Fraction(k, 2)
            assert mult == k + 2 * j + 1
