"""Wavelet-Galerkin solver for the truncated Wigner-Moyal equation."""
from .wavelets import DEFAULT_FAMILY, WaveletFamily, make_family
from .moyal import CoefficientField, PhaseSpaceGrid, Potential, assemble_moyal, add_decoherence, poly_potential

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_FAMILY",
    "WaveletFamily",
    "make_family",
    "CoefficientField",
    "PhaseSpaceGrid",
    "Potential",
    "assemble_moyal",
    "add_decoherence",
    "poly_potential",
    "__version__",
]
