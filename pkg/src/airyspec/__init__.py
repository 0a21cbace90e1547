"""Airy integral operator: eigenfunctions, eigenvalues to relative precision,
soft-edge level distributions, and finite-energy Airy beams."""

from .distributions import DistValue, cdf, pdf, spectral_factors
from .eigfun import AirySpectrum, LaguerreExpansion, OperatorParams, compute_eigenfunctions, eval_psi, select_basis
from .specfun import airy_ai, airy_ai_prime
from .spectrum import dlambda_dc, full_spectrum

__all__ = [
    "AirySpectrum",
    "DistValue",
    "LaguerreExpansion",
    "OperatorParams",
    "airy_ai",
    "airy_ai_prime",
    "cdf",
    "compute_eigenfunctions",
    "dlambda_dc",
    "eval_psi",
    "full_spectrum",
    "pdf",
    "select_basis",
    "spectral_factors",
]

__version__ = "0.1.0"
