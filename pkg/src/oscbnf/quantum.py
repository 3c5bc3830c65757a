"""Block spectra of quantized invariant perturbations.

The eigenspace of the two-mode oscillator with total quantum number ``n`` is
spanned by ``|k1, n - k1>``. An invariant monomial ``z1^a z2^b zbar1^c
zbar2^d`` maps ``z_j -> sqrt(2 hbar) a_j`` and ``zbar_j -> sqrt(2 hbar)
a_j^dagger``, with all orderings of the factors averaged (Weyl ordering),
so ``|z1|^2 -> 2 hbar (N1 + 1/2)``. Each such operator preserves the block.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.linalg import eigh, eigh_tridiagonal

from .polynomial import OscillatorPolynomial, non_invariant_terms, qqi_to_complex


def weyl_mode_coefficients(p: int, q: int, k: np.ndarray) -> np.ndarray:
    """Matrix elements of the symmetrized product of ``p`` lowerings and ``q`` raisings.

    Returns ``c_k`` with ``Sym(a^p adag^q)|k> = c_k |k - p + q>``, averaged
    over all ``C(p+q, p)`` orderings.
    """
    k = np.asarray(k, dtype=float)
    # dp[j] after i lowerings and j raisings (applied right to left)
    dp = [[None] * (q + 1) for _ in range(p + 1)]
    dp[0][0] = np.ones_like(k)
    for i in range(p + 1):
        for j in range(q + 1):
            cur = dp[i][j]
            if cur is None:
                continue
            m = k - i + j
            if i < p:
                nxt = cur * np.sqrt(np.maximum(m, 0.0))
                dp[i + 1][j] = nxt if dp[i + 1][j] is None else dp[i + 1][j] + nxt
            if j < q:
                nxt = cur * np.sqrt(np.maximum(m + 1, 0.0))
                dp[i][j + 1] = nxt if dp[i][j + 1] is None else dp[i][j + 1] + nxt
    return dp[p][q] / comb(p + q, p)


def quantize_matrix(h: OscillatorPolynomial, n: int, hbar: float) -> np.ndarray:
    """Weyl-ordered restriction of ``h`` to the block ``k1 + k2 = n``."""
    bad = non_invariant_terms(h)
    if bad:
        raise ValueError(f"perturbation is not invariant: monomial exponents {bad[0]}")
    k1 = np.arange(n + 1)
    k2 = n - k1
    M = np.zeros((n + 1, n + 1), dtype=complex)
    for (a, b, c, d), coef in h.terms.items():
        val = qqi_to_complex(coef) * (2.0 * hbar) ** ((a + b + c + d) / 2)
        amp = val * weyl_mode_coefficients(a, c, k1) * weyl_mode_coefficients(b, d, k2)
        target = k1 - a + c
        ok = (target >= 0) & (target <= n) & (amp != 0)
        np.add.at(M, (target[ok], k1[ok]), amp[ok])
    return M


def _is_tridiagonal(M: np.ndarray) -> bool:
    n = M.shape[0]
    if n < 3:
        return True
    return not np.any(np.triu(M, 2)) and not np.any(np.tril(M, -2))


def hermitian_eigenvalues(M: np.ndarray) -> tuple[np.ndarray, bool]:
    """Ascending eigenvalues; tridiagonal matrices take the banded path."""
    if _is_tridiagonal(M):
        d = M.diagonal().real.copy()
        # a diagonal unitary makes the off-diagonal real and nonnegative
        e = np.abs(M.diagonal(-1))
        if d.size == 1:
            return d, True
        return eigh_tridiagonal(d, e, eigvals_only=True), True
    return eigh(M, eigvals_only=True), False


@dataclass(frozen=True, eq=False)
class SpectralBlock:
    """Quantized perturbation on one oscillator eigenspace.

    Attributes
    ----------
    n : int
        Block index; the block has dimension ``n + 1``.
    hbar : float
    matrix : ndarray, shape (n+1, n+1)
        Hermitian matrix in the basis ``|k1, n - k1>``, ``k1 = 0..n``.
    shifts : ndarray, shape (n+1,)
        Sorted eigenvalues of ``matrix``.
    tridiagonal : bool
        Whether the banded eigensolver was used.
    """

    n: int
    hbar: float
    matrix: np.ndarray
    shifts: np.ndarray
    tridiagonal: bool

    @property
    def lam(self) -> float:
        return self.hbar * (self.n + 1)

    @property
    def eigenvalues(self) -> np.ndarray:
        """``hbar (n+1) + hbar^2 * shifts``."""
        return self.hbar * (self.n + 1) + self.hbar ** 2 * self.shifts


def quantize_block(h2, n: int, hbar: float) -> SpectralBlock:
    """Quantize an invariant polynomial (or a truncated ``hbar``-series) on block ``n``.

    ``h2`` may be a list ``[H2, H3, ...]``, in which case the block of
    ``H2 + hbar H3 + hbar^2 H4 + ...`` is returned.
    """
    if n < 0:
        raise ValueError("block index must be nonnegative")
    series = [h2] if isinstance(h2, OscillatorPolynomial) else list(h2)
    M = np.zeros((n + 1, n + 1), dtype=complex)
    for order, h in enumerate(series):
        if not h.is_zero():
            M += hbar ** order * quantize_matrix(h, n, hbar)
    M = 0.5 * (M + M.conj().T)
    shifts, tri = hermitian_eigenvalues(M)
    return SpectralBlock(int(n), float(hbar), M, np.sort(shifts), tri)


@dataclass(frozen=True, eq=False)
class AssembledSpectrum:
    """Eigenvalues ``hbar (n+1) + hbar^2 mu_{n,l}`` with their block tags, sorted by value."""

    hbar: float
    n: np.ndarray
    ell: np.ndarray
    eigenvalues: np.ndarray
    shifts: np.ndarray
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.eigenvalues.size

    def block(self, n: int) -> np.ndarray:
        """Eigenvalues tagged with block ``n``, ascending."""
        return np.sort(self.eigenvalues[self.n == n])

    def blocks(self) -> list[int]:
        return sorted(set(int(v) for v in self.n))


def assemble_spectrum(h_series: Sequence[OscillatorPolynomial] | OscillatorPolynomial,
                      hbar: float, n_range: Iterable[int]) -> AssembledSpectrum:
    """Union of the block spectra for ``n`` in ``n_range``.

    ``h_series[j]`` is the coefficient of ``hbar^(2+j)`` in the perturbation.
    """
    ns = sorted(set(int(v) for v in n_range))
    if not ns:
        raise ValueError("empty block range")
    series = [h_series] if isinstance(h_series, OscillatorPolynomial) else list(h_series)
    if not series:
        raise ValueError("the perturbation series needs at least the order-2 term")
    tags, ells, eigs, shifts = [], [], [], []
    for n in ns:
        blk = quantize_block(series, n, hbar)
        tags.append(np.full(n + 1, n))
        ells.append(np.arange(n + 1))
        eigs.append(blk.eigenvalues)
        shifts.append(blk.shifts)
    tags, ells, eigs, shifts = (np.concatenate(v) for v in (tags, ells, eigs, shifts))
    order = np.argsort(eigs, kind="stable")
    return AssembledSpectrum(float(hbar), tags[order], ells[order], eigs[order], shifts[order],
                             {"orders": len(series), "zero_point": "hbar*(n+1)"})


@dataclass(frozen=True, eq=False)
class SyntheticSpectrum:
    """Normal-form lattice spectrum with its generating functions.

    ``E = hbar (k1 + k2 + 2 offset) + hbar^2 G2(s, t) + hbar^3 G3(s, t)`` with
    ``(s, t) = hbar (k1 + offset, k2 + offset)``. ``offset = 1/2`` matches
    the oscillator zero point ``hbar (n + 1)``.
    """

    hbar: float
    k1: np.ndarray
    k2: np.ndarray
    energies: np.ndarray
    G2: Callable
    G3: Callable
    offset: float = 0.0
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.energies.size

    @property
    def s(self) -> np.ndarray:
        return self.hbar * (self.k1 + self.offset)

    @property
    def t(self) -> np.ndarray:
        return self.hbar * (self.k2 + self.offset)

    @property
    def u(self) -> np.ndarray:
        return self.s + self.t

    @property
    def v(self) -> np.ndarray:
        """Rescaled lattice shifts ``(E - hbar u_lattice) / hbar^2``."""
        return (self.energies - self.u) / self.hbar ** 2


def _zero(s, t):
    return np.zeros(np.broadcast(np.asarray(s), np.asarray(t)).shape)


def synth_lattice(G2: Callable | None, G3: Callable | None, hbar: float, window,
                  offset: float = 0.0) -> SyntheticSpectrum:
    """Evaluate the normal-form lattice on a finite window.

    Parameters
    ----------
    G2, G3 : callable or None
        Vectorized functions of ``(s, t)``; ``None`` means zero.
    window : (n_min, n_max) or ((k1_min, k1_max), (k2_min, k2_max))
        Either all ``k1 + k2 = n`` for ``n_min <= n <= n_max``, or a
        rectangle of quantum numbers (inclusive bounds).
    offset : float
        Zero-point offset added to both quantum numbers.
    """
    G2 = G2 or _zero
    G3 = G3 or _zero
    window = tuple(window)
    if len(window) != 2:
        raise ValueError("window must have two entries")
    if np.ndim(window[0]) == 0:
        lo, hi = int(window[0]), int(window[1])
        if lo < 0 or hi < lo:
            raise ValueError("block window must satisfy 0 <= n_min <= n_max")
        k1 = np.concatenate([np.arange(n + 1) for n in range(lo, hi + 1)])
        k2 = np.concatenate([n - np.arange(n + 1) for n in range(lo, hi + 1)])
        kind = {"blocks": [lo, hi]}
    else:
        (a1, b1), (a2, b2) = window
        if min(a1, a2) < 0 or b1 < a1 or b2 < a2:
            raise ValueError("rectangle window must have 0 <= min <= max")
        K1, K2 = np.meshgrid(np.arange(a1, b1 + 1), np.arange(a2, b2 + 1), indexing="ij")
        k1, k2 = K1.ravel(), K2.ravel()
        kind = {"rectangle": [[a1, b1], [a2, b2]]}
    s = hbar * (k1 + offset)
    t = hbar * (k2 + offset)
    E = s + t + hbar ** 2 * np.asarray(G2(s, t), dtype=float) + hbar ** 3 * np.asarray(G3(s, t), dtype=float)
    return SyntheticSpectrum(float(hbar), k1, k2, E, G2, G3, float(offset),
                             {"window": kind, "offset": offset,
                              "zero_point": f"hbar*(k1+k2+{2 * offset:g})"})
