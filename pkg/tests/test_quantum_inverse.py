import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oscbnf.inverse import (Bump, OrientationError, ShiftSample, cluster_halfwidth,
                            euler_maclaurin_check, ks_distance, recover_f2, recover_g,
                            shifts_from_spectrum)
from oscbnf.measure import AreaLaw, pushforward_density
from oscbnf.parsing import parse_polynomial, parse_reduced
from oscbnf.polynomial import H0, random_polynomial
from oscbnf.quantum import (assemble_spectrum, hermitian_eigenvalues, quantize_block,
                            quantize_matrix, synth_lattice, weyl_mode_coefficients)
from oscbnf.reduced import reduce


def test_weyl_single_modes():
    k = np.arange(6.0)
    assert np.allclose(weyl_mode_coefficients(1, 0, k), np.sqrt(k))
    assert np.allclose(weyl_mode_coefficients(0, 1, k), np.sqrt(k + 1))
    # symmetrized a adag is the number operator plus one half
    assert np.allclose(weyl_mode_coefficients(1, 1, k), k + 0.5)


def test_x3_shifts_exact():
    hbar, n = 0.1, 6
    blk = quantize_block(parse_polynomial("X3"), n, hbar)
    # the operator of X3 is hbar (k1 - n/2) on |k1, n - k1>
    assert np.allclose(blk.shifts, hbar * (np.arange(n + 1) - n / 2))
    assert np.allclose(blk.eigenvalues, hbar * (n + 1) + hbar ** 3 * (np.arange(n + 1) - n / 2))


def test_oscillator_energy_is_constant_shift():
    blk = quantize_block(H0, 5, 0.2)
    assert np.allclose(blk.shifts, 0.2 * 6)


def test_rejects_non_invariant():
    with pytest.raises(ValueError):
        quantize_matrix(parse_polynomial("x1"), 3, 0.1)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 31), st.integers(1, 12))
def test_blocks_hermitian_and_trace(seed, n):
    h = random_polynomial(np.random.default_rng(seed), 4, nterms=6, invariant=True)
    blk = quantize_block(h, n, 0.05)
    assert np.allclose(blk.matrix, blk.matrix.conj().T)
    assert blk.shifts.sum() == pytest.approx(np.trace(blk.matrix).real, abs=1e-9)
    dense = np.linalg.eigvalsh(blk.matrix)
    assert np.allclose(np.sort(dense), blk.shifts, atol=1e-9)


def test_tridiagonal_path():
    blk = quantize_block(parse_polynomial("X3 + 0.3*X1"), 30, 1 / 31)
    assert blk.tridiagonal
    full = np.linalg.eigvalsh(blk.matrix)
    assert np.allclose(full, blk.shifts, atol=1e-10)
    eigs, tri = hermitian_eigenvalues(np.diag([1.0, 2.0]) + 0.5j * np.eye(2)[::-1] * np.array([[1], [-1]]))
    assert tri


def test_assembled_spectrum_tags():
    spec = assemble_spectrum([parse_polynomial("X3")], 0.1, [2, 3])
    assert spec.blocks() == [2, 3]
    assert len(spec) == 7
    assert np.all(np.diff(spec.eigenvalues) >= 0)


def test_synthetic_lattice():
    spec = synth_lattice(lambda s, t: s * t, None, 0.01, (3, 4), offset=0.5)
    assert len(spec) == 9
    assert np.allclose(spec.v, spec.s * spec.t)
    rect = synth_lattice(None, None, 0.1, ((0, 2), (0, 3)))
    assert len(rect) == 12


@settings(max_examples=10, deadline=None)
@given(st.integers(50, 400))
def test_uniform_quantiles(n):
    x = (np.arange(n) + 0.5) / n
    sample = ShiftSample(1.0, n - 1, np.random.default_rng(n).permutation(x))
    q = np.linspace(0.1, 0.9, 33)
    assert np.max(np.abs(sample.quantile(q) - q)) < 2 / n


def test_cluster_cardinality():
    spec = assemble_spectrum([parse_polynomial("X3")], 0.05, [10])
    s = shifts_from_spectrum(spec, 0.05, 10)
    assert s.size == 11
    with pytest.raises(ValueError, match="holds"):
        shifts_from_spectrum(spec, 0.05, 11)
    assert cluster_halfwidth(parse_reduced("X3 + 0.3*X1"), 1.0) == pytest.approx(2 * 0.5 * math.hypot(1, 0.3))


def test_recover_f2_round_trip_nonlinear():
    h2 = parse_polynomial("X3 + 0.4*X1^2")
    n = 200
    hbar = 1 / (n + 1)
    rec = recover_f2(shifts_from_spectrum(assemble_spectrum([h2], hbar, [n]), hbar, n))
    from oscbnf.bnf import f2_slice
    q = np.linspace(0.1, 0.9, 41)
    assert np.max(np.abs(rec(q * rec.lam) - f2_slice(h2, rec.lam).quantile(q))) < 0.02
    assert np.all(rec.jacobian(q * rec.lam) > 0)


def test_recover_g_orientation():
    up = recover_g(synth_lattice(lambda s, t: s - t, None, 0.01, (98, 102)), 1.0)
    assert up.orientation == "increasing"
    down = recover_g(synth_lattice(lambda s, t: t - s, None, 0.01, (98, 102)), 1.0)
    assert down.orientation == "decreasing"
    with pytest.raises(OrientationError):
        recover_g(synth_lattice(lambda s, t: (s - t) ** 2, None, 0.01, (98, 102)), 1.0)


def test_recover_g_on_blocks_with_zero_point():
    def G2(s, t):
        return s + 0.5 * s * t

    spec = synth_lattice(G2, None, 1 / 200, (199, 199), offset=0.5)
    rec = recover_g(spec, 1.0)
    s = np.linspace(0.1, 0.9, 9) * rec.lam
    assert np.max(np.abs(rec(s) - G2(s, rec.lam - s))) < 0.02


def test_euler_maclaurin_flat_symbol_is_fast():
    bump = Bump((1.0, 0.0), 0.5)
    gaps = []
    for hbar in (1 / 50, 1 / 100):
        spec = synth_lattice(None, None, hbar, (0, int(2 / hbar)), offset=0.5)
        gaps.append(euler_maclaurin_check(spec, bump)[2])
    # without a symbol the sum is a one-dimensional midpoint rule in u
    assert max(gaps) < 1e-6
    with pytest.raises(ValueError, match="escapes"):
        euler_maclaurin_check(synth_lattice(None, None, 0.1, (0, 5)), bump)


def test_ks_against_density_and_law():
    w = parse_reduced("X3 + 0.3*X1")
    law = AreaLaw.build(w, 1.0)
    x = law.inverse(2 * np.pi * (np.arange(500) + 0.5) / 500)
    sample = ShiftSample(1.0, 499, x)
    assert ks_distance(sample, law) <= 1 / 500 + 1e-9
    d = pushforward_density(w, 1.0, method="orbit", law=law, bins=64)
    assert ks_distance(sample, d) < 0.01
    assert ks_distance(sample, sample) == 0.0
