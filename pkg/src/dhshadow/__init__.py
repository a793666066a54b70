"""Spectral shadows of lambda-connection moduli on a punctured curve."""
from .config import Config
from .errors import (DomainViolation, HypothesisViolation, InputError, NumericalDegeneracy,
                     ShadowError)
from .kms import FlowValue, HarmonicShadow, KmsPoint, KmsSpectrum, flow, lattice_shift

__all__ = [
    "Config", "DomainViolation", "FlowValue", "HarmonicShadow", "HypothesisViolation",
    "InputError", "KmsPoint", "KmsSpectrum", "NumericalDegeneracy", "ShadowError",
    "flow", "lattice_shift",
]
__version__ = "0.1.0"
