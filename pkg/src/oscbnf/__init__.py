"""Birkhoff normal forms of perturbed two-dimensional isotropic oscillators.

Classical canonical forms from sphere area laws, Weyl quantization of the
resonant blocks, inverse spectral recovery, harmonic analysis on the sphere
and symplectic flow verification.
"""

from .bnf import (BnfSlice, BnfSurface, MomentMap, MorseCertificate, f2_slice, f2_surface,
                  local_window_match, morse_certify)
from .inverse import (Bump, RecoveredSlice, ShiftSample, euler_maclaurin_check, ks_distance,
                      recover_f2, recover_g, shifts_from_spectrum)
from .measure import AreaLaw, MonotoneMap, NotPerfectMorseError, SphereGrid, area_function
from .parsing import ParseError, parse_polynomial, parse_reduced
from .polynomial import OscillatorPolynomial, poisson_bracket
from .quantum import assemble_spectrum, quantize_block, quantize_matrix, synth_lattice
from .reduced import ReducedPolynomial, lift, reduce

__all__ = [
    "AreaLaw", "BnfSlice", "BnfSurface", "Bump", "MomentMap", "MonotoneMap", "MorseCertificate",
    "NotPerfectMorseError", "OscillatorPolynomial", "ParseError", "RecoveredSlice",
    "ReducedPolynomial", "ShiftSample", "SphereGrid", "area_function", "assemble_spectrum",
    "euler_maclaurin_check", "f2_slice", "f2_surface", "ks_distance", "lift",
    "local_window_match", "morse_certify", "parse_polynomial", "parse_reduced",
    "poisson_bracket", "quantize_block", "quantize_matrix", "recover_f2", "recover_g",
    "reduce", "shifts_from_spectrum", "synth_lattice",
]
