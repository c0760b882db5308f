"""Siegert poles of one-dimensional potentials and transmission spectra built from them."""

from .expansion import reconstruct, transmission_product, transmission_sum
from .poles import Parity, Pole, PoleClass, PoleSet, Rect, classify, collect_poles, find_poles
from .potentials import DoubleBarrier, SquareWell, Symmetry, Tabulated, parse_potential
from .profiles import (ResonanceDescriptor, breit_wigner, fwhm_single, single_resonance_profile,
                       two_antibound_profile)
from .scattering import matching_determinant, transmission_exact
from .tracking import detect_events, trace

__version__ = "0.1.0"

__all__ = [
    "DoubleBarrier", "Parity", "Pole", "PoleClass", "PoleSet", "Rect", "ResonanceDescriptor",
    "SquareWell", "Symmetry", "Tabulated", "breit_wigner", "classify", "collect_poles",
    "detect_events", "find_poles", "fwhm_single", "matching_determinant", "parse_potential",
    "reconstruct", "single_resonance_profile", "trace", "transmission_exact",
    "transmission_product", "transmission_sum", "two_antibound_profile",
]
