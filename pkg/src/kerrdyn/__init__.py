"""Two angular-momentum-coupled Kerr oscillators in a truncated Fock basis."""

__version__ = "0.1.0"

from .dynamics import StateVector, TimeGrid, coherent_state, evolve, evolve_many, time_series
from .errors import (
    ConfigError, DomainError, KerrDynError, NumericalError, SpectralError, TruncationError,
)
from .fockspace import FockBasis, Operator, annihilator, creator, number_op, quadrature_ops
from .model import ModelParams, build_hamiltonian, couplings_from_rotation, normal_frequencies
from .observables import (
    entanglement_entropy, mode_moments, nongaussianity, number_statistics, partial_trace,
    squeezing_ratios,
)
from .spectral import EigenSystem, eigendecompose, verify

__all__ = [
    "ConfigError", "DomainError", "EigenSystem", "FockBasis", "KerrDynError", "ModelParams",
    "NumericalError", "Operator", "SpectralError", "StateVector", "TimeGrid", "TruncationError",
    "annihilator", "build_hamiltonian", "coherent_state", "couplings_from_rotation", "creator",
    "eigendecompose", "entanglement_entropy", "evolve", "evolve_many", "mode_moments",
    "nongaussianity", "normal_frequencies", "number_op", "number_statistics", "partial_trace",
    "quadrature_ops", "squeezing_ratios", "time_series", "verify",
]
