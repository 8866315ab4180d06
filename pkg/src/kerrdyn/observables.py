"""Single-mode diagnostics of a pure two-mode state.

Entropies are in bits.  All moment-based quantities (symplectic value,
number statistics, quadrature variances) are computed from the ladder
moments <a>, <a^dag a>, <a^2>, <N^2>.  Those moments are exact expectation
values of the untruncated operators for any state in the truncated space,
so the uncertainty relation and the gaussian entropy bound hold without
top-shell artifacts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import StateVector
from .errors import DomainError, NumericalError, PhysicalityError
from .fockspace import annihilator, number_op, quadrature_ops

EIG_FLOOR = 1e-14
MEAN_N_FLOOR = 1e-14
RADICAND_TOL = 1e-9
ENTROPY_AGREE_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class ReducedDensity:
    matrix: np.ndarray
    mode: int

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


@dataclass(frozen=True)
class ModeMoments:
    mean_a: complex
    mean_n: float
    mean_a2: complex
    mean_n2: float
    mode: int


@dataclass(frozen=True)
class NumberStatistics:
    meanN: float
    varN: float
    D: float
    mandelQ: float | None
    fano: float | None
    g2: float | None


def _check_mode(mode: int) -> None:
    if mode not in (1, 2):
        raise DomainError(f"mode must be 1 or 2, got {mode!r}")


def partial_trace(state: StateVector, mode: int) -> ReducedDensity:
    """Reduced density matrix of ``mode`` (the other mode is traced out)."""
    _check_mode(mode)
    c = state.grid()
    rho = c @ c.conj().T if mode == 1 else c.T @ c.conj()
    rho = 0.5 * (rho + rho.conj().T)
    tr = float(np.real(np.trace(rho)))
    if abs(tr - 1.0) > 1e-10:
        raise NumericalError(f"reduced density of mode {mode} has trace {tr!r}")
    lo = float(np.linalg.eigvalsh(rho)[0])
    if lo < -1e-10:
        raise NumericalError(f"reduced density of mode {mode} has eigenvalue {lo:.3e}")
    return ReducedDensity(rho, mode)


def von_neumann_entropy(rho: ReducedDensity | np.ndarray) -> float:
    m = rho.matrix if isinstance(rho, ReducedDensity) else np.asarray(rho)
    p = np.linalg.eigvalsh(m)
    p = p[p > EIG_FLOOR]
    return float(-(p * np.log2(p)).sum()) if len(p) else 0.0


def entanglement_entropy(state: StateVector) -> float:
    s1 = von_neumann_entropy(partial_trace(state, 1))
    s2 = von_neumann_entropy(partial_trace(state, 2))
    if abs(s1 - s2) > ENTROPY_AGREE_TOL:
        raise NumericalError(f"S(rho1)={s1!r} and S(rho2)={s2!r} disagree")
    return max(0.0, 0.5 * (s1 + s2))


def mode_moments(state: StateVector, mode: int) -> ModeMoments:
    _check_mode(mode)
    psi = state.amplitudes
    a = annihilator(state.basis, mode).matrix
    n = number_op(state.basis, mode).matrix
    a_psi = a @ psi
    n_psi = n @ psi
    return ModeMoments(
        mean_a=complex(np.vdot(psi, a_psi)),
        mean_n=float(np.vdot(psi, n_psi).real),
        mean_a2=complex(np.vdot(psi, a @ a_psi)),
        mean_n2=float(np.vdot(n_psi, n_psi).real),
        mode=mode,
    )


def symplectic_f(moments: ModeMoments) -> float:
    """Symplectic eigenvalue (minus 1/2) of the single-mode covariance matrix."""
    m = moments
    radicand = (m.mean_n - abs(m.mean_a) ** 2 + 0.5) ** 2 - abs(m.mean_a2 - m.mean_a**2) ** 2
    floor = 0.25
    if radicand < floor - RADICAND_TOL:
        raise PhysicalityError(
            f"covariance radicand {radicand!r} violates the uncertainty bound 1/4"
        )
    return max(0.0, math.sqrt(max(radicand, floor)) - 0.5)


def gaussian_entropy(f: float) -> float:
    """Entropy (bits) of a single-mode gaussian state with symplectic value ``f``."""
    if f < 0:
        raise DomainError(f"symplectic value must be nonnegative, got {f!r}")
    if f == 0:
        return 0.0
    return float(-f * math.log2(f) + (1.0 + f) * math.log2(1.0 + f))


def nongaussianity(state: StateVector, mode: int) -> float:
    """``S_g(f) - S(rho)``; zero for gaussian reduced states, positive otherwise."""
    f = symplectic_f(mode_moments(state, mode))
    return gaussian_entropy(f) - von_neumann_entropy(partial_trace(state, mode))


def number_statistics_from_moments(m: ModeMoments) -> NumberStatistics:
    var = m.mean_n2 - m.mean_n**2
    d = var - m.mean_n
    if m.mean_n > MEAN_N_FLOOR:
        q = d / m.mean_n
        return NumberStatistics(m.mean_n, var, d, q, 1.0 + q, 1.0 + d / m.mean_n**2)
    return NumberStatistics(m.mean_n, var, d, None, None, None)


def number_statistics(state: StateVector, mode: int) -> NumberStatistics:
    """Mean, variance, ``D = var - <N>``, Mandel Q, Fano factor and g2(0).

    Ratios are ``None`` when the mode is empty.
    """
    return number_statistics_from_moments(mode_moments(state, mode))


def quadrature_variances(moments: ModeMoments) -> tuple[float, float]:
    """Variances of ``x = (a+a^dag)/sqrt2`` and ``p = -i(a-a^dag)/sqrt2``."""
    m = moments
    var_x = m.mean_n + 0.5 + m.mean_a2.real - 2.0 * m.mean_a.real**2
    var_p = m.mean_n + 0.5 - m.mean_a2.real - 2.0 * m.mean_a.imag**2
    return var_x, var_p


def quadrature_variances_direct(state: StateVector, mode: int) -> tuple[float, float]:
    """Same variances from the truncated x, p matrices (differs only via top-shell weight)."""
    x, p = quadrature_ops(state.basis, mode)
    out = []
    for op in (x, p):
        v = op.matrix @ state.amplitudes
        mean = float(np.vdot(state.amplitudes, v).real)
        out.append(float(np.vdot(v, v).real) - mean**2)
    return out[0], out[1]


def squeezing_ratios_from_moments(m_t: ModeMoments, m_0: ModeMoments) -> tuple[float, float]:
    vx_t, vp_t = quadrature_variances(m_t)
    vx_0, vp_0 = quadrature_variances(m_0)
    if vx_0 <= 0 or vp_0 <= 0:
        raise NumericalError("reference quadrature variance is not positive")
    return math.sqrt(vx_t / vx_0) - 1.0, math.sqrt(vp_t / vp_0) - 1.0


def squeezing_ratios(state_t: StateVector, state_0: StateVector, mode: int) -> tuple[float, float]:
    """Shifted ratios ``sqrt(var_t / var_0) - 1`` for the x and p quadratures."""
    if state_t.basis != state_0.basis:
        raise DomainError("states live on different bases")
    return squeezing_ratios_from_moments(mode_moments(state_t, mode), mode_moments(state_0, mode))
