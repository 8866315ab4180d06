"""Model parameters, Hamiltonian assembly and normal-mode analysis.

Units: hbar = 1 and energies/frequencies are expressed in units of omega1
(which defaults to 1).  Times are therefore in units of 1/omega1.

The Hamiltonian is

    H = w1 (N1 + 1/2) + w2 (N2 + 1/2)
        - i l1 (a2^dag a1 - a1^dag a2) - i l2 (a1 a2 - a1^dag a2^dag)
        + b1 a1^dag^2 a1^2 + b2 a2^dag^2 a2^2

and for a rotating anisotropic trap the couplings follow from the
rotation frequency ``omega`` via :func:`couplings_from_rotation`.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import AssemblyError, DomainError
from .fockspace import HERMITIAN_TOL, FockBasis, Operator, annihilator, identity, number_op


def couplings_from_rotation(omega: float, omega1: float, omega2: float) -> tuple[float, float]:
    """Exchange and pair couplings ``(lambda1, lambda2)`` of a rotating trap."""
    if omega1 <= 0 or omega2 <= 0:
        raise DomainError("mode frequencies must be positive")
    if omega < 0:
        raise DomainError("rotation frequency must be nonnegative")
    r = math.sqrt(omega1 / omega2)
    return 0.5 * omega * (r + 1.0 / r), 0.5 * omega * (r - 1.0 / r)


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters with the couplings already resolved.

    Build with :meth:`from_rotation` or :meth:`from_couplings`; ``omega`` is
    kept (``None`` for a direct coupling pair) so that rotation-specific
    closed forms stay exact.
    """

    omega1: float = 1.0
    omega2: float = 0.5
    lambda1: float = 0.0
    lambda2: float = 0.0
    beta1: float = 0.0
    beta2: float = 0.0
    omega: float | None = None

    def __post_init__(self):
        if not (self.omega1 > 0 and self.omega2 > 0):
            raise DomainError("omega1 and omega2 must be positive")
        if self.omega2 > self.omega1:
            raise DomainError("modes must be ordered with omega1 >= omega2")
        for name in ("lambda1", "lambda2", "beta1", "beta2"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise DomainError(f"{name} must be finite and nonnegative, got {v!r}")
        if self.omega is not None:
            if self.omega < 0:
                raise DomainError("rotation frequency must be nonnegative")
            l1, l2 = couplings_from_rotation(self.omega, self.omega1, self.omega2)
            if abs(l1 - self.lambda1) > 1e-14 * max(1.0, l1) or abs(l2 - self.lambda2) > 1e-14 * max(1.0, l1):
                raise DomainError("lambda1/lambda2 inconsistent with omega")

    @classmethod
    def from_rotation(cls, omega, omega1=1.0, omega2=0.5, beta1=0.0, beta2=0.0):
        l1, l2 = couplings_from_rotation(omega, omega1, omega2)
        return cls(omega1, omega2, l1, l2, beta1, beta2, omega=float(omega))

    @classmethod
    def from_couplings(cls, lambda1, lambda2, omega1=1.0, omega2=0.5, beta1=0.0, beta2=0.0):
        return cls(omega1, omega2, float(lambda1), float(lambda2), beta1, beta2)

    def as_dict(self) -> dict:
        return {
            "omega1": self.omega1, "omega2": self.omega2, "omega": self.omega,
            "lambda1": self.lambda1, "lambda2": self.lambda2,
            "beta1": self.beta1, "beta2": self.beta2,
        }


def kerr_level_energy(n: int, omega: float, beta: float) -> float:
    """Level ``n`` of an uncoupled Kerr oscillator: ``w (n + 1/2) + b n (n - 1)``."""
    if n < 0:
        raise DomainError("occupation must be nonnegative")
    return omega * (n + 0.5) + beta * n * (n - 1)


def uncoupled_spectrum(params: ModelParams, basis: FockBasis) -> np.ndarray:
    """Sorted tensor-sum spectrum of the two Kerr oscillators (couplings ignored)."""
    n = np.arange(basis.d)
    e1 = params.omega1 * (n + 0.5) + params.beta1 * n * (n - 1)
    e2 = params.omega2 * (n + 0.5) + params.beta2 * n * (n - 1)
    return np.sort(np.add.outer(e1, e2).ravel())


def hamiltonian_matrix(basis: FockBasis, omega1, omega2, lambda1=0.0, lambda2=0.0,
                       beta1=0.0, beta2=0.0) -> sp.csr_matrix:
    """Sparse Hamiltonian for arbitrary real couplings (signs unrestricted)."""
    a1 = annihilator(basis, 1).matrix
    a2 = annihilator(basis, 2).matrix
    a1d, a2d = a1.getH(), a2.getH()
    one = identity(basis).matrix
    h = (
        omega1 * (number_op(basis, 1).matrix + 0.5 * one)
        + omega2 * (number_op(basis, 2).matrix + 0.5 * one)
        - 1j * lambda1 * (a2d @ a1 - a1d @ a2)
        - 1j * lambda2 * (a1 @ a2 - a1d @ a2d)
        + beta1 * (a1d @ a1d @ a1 @ a1)
        + beta2 * (a2d @ a2d @ a2 @ a2)
    )
    return sp.csr_matrix(h, dtype=complex)


def build_hamiltonian(params: ModelParams, basis: FockBasis) -> Operator:
    p = params
    h = hamiltonian_matrix(basis, p.omega1, p.omega2, p.lambda1, p.lambda2, p.beta1, p.beta2)
    diff = h - h.getH()
    defect = float(abs(diff).max()) if diff.nnz else 0.0
    if defect > HERMITIAN_TOL:
        raise AssemblyError(f"Hamiltonian not Hermitian: defect {defect:.3e}")
    return Operator(h, basis, hermitian=True, label="H")


@dataclass(frozen=True)
class NormalModes:
    omega_plus: complex | float
    omega_minus: complex | float
    delta: complex | float
    stable: bool


def _real_if_possible(z: complex) -> complex | float:
    return z.real if z.imag == 0 else z


def normal_frequencies(params: ModelParams) -> NormalModes:
    """Normal-mode frequencies of the quadratic part and its stability.

    ``w_-^2`` is obtained from ``w_+^2 w_-^2 = (w1 w2 - (l1+l2)^2)(w1 w2 - (l1-l2)^2)``
    instead of ``A - Delta``; the difference form loses all precision near the
    stability border.  With a rotation frequency the product is the exact
    ``(w1^2 - w^2)(w2^2 - w^2)``.
    """
    w1, w2, l1, l2 = params.omega1, params.omega2, params.lambda1, params.lambda2
    if params.omega is not None:
        w = params.omega
        centre = 0.5 * (w1**2 + w2**2) + w**2
        delta2 = (0.5 * (w1**2 - w2**2)) ** 2 + 2.0 * w**2 * (w1**2 + w2**2)
        product = (w1**2 - w**2) * (w2**2 - w**2)
        stable = w < w2
    else:
        centre = 0.5 * (w1**2 + w2**2) + l1**2 - l2**2
        delta2 = (0.5 * (w1**2 - w2**2)) ** 2 + l1**2 * (w1 + w2) ** 2 - l2**2 * (w1 - w2) ** 2
        product = (w1 * w2 - (l1 + l2) ** 2) * (w1 * w2 - (l1 - l2) ** 2)
        stable = l1 + l2 < math.sqrt(w1 * w2)
    delta = cmath.sqrt(delta2)
    wp2 = centre + delta
    if wp2 != 0:
        wm2 = product / wp2
    else:
        wm2 = centre - delta
    return NormalModes(
        omega_plus=_real_if_possible(cmath.sqrt(wp2)),
        omega_minus=_real_if_possible(cmath.sqrt(wm2)),
        delta=_real_if_possible(delta),
        stable=bool(stable),
    )
