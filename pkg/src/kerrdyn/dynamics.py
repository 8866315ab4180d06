"""Initial states, spectral time evolution and expectation-value series."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from .errors import DomainError, TruncationError
from .fockspace import FockBasis, Operator
from .spectral import EigenSystem

NORM_TOL = 1e-12
TRUNCATION_THRESHOLD = 1e-8


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray
    basis: FockBasis
    truncation_weight: float = 0.0

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex)
        if amp.shape != (self.basis.dim,):
            raise DomainError(f"amplitude vector of shape {amp.shape} does not fit dim {self.basis.dim}")
        object.__setattr__(self, "amplitudes", amp)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def grid(self) -> np.ndarray:
        """Amplitudes as a ``(d, d)`` array indexed ``[n1, n2]``."""
        return self.amplitudes.reshape(self.basis.d, self.basis.d)

    def expect(self, op: Operator) -> complex:
        return op.expect(self.amplitudes)

    def fidelity(self, other: "StateVector") -> float:
        return float(abs(np.vdot(self.amplitudes, other.amplitudes)) ** 2)

    def edge_weight(self) -> float:
        """Probability sitting on the top shell (either mode at ``m_cut``)."""
        p = np.abs(self.grid()) ** 2
        return float(p[-1, :].sum() + p[:-1, -1].sum())


@dataclass(frozen=True)
class TimeGrid:
    t_start: float = 0.0
    t_end: float = 30.0
    n_points: int = 601

    def __post_init__(self):
        if not self.t_end > self.t_start:
            raise DomainError("t_end must exceed t_start")
        if self.n_points < 2:
            raise DomainError("a time grid needs at least two points")

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t_start, self.t_end, self.n_points)


def from_amplitudes(amplitudes, basis: FockBasis, normalize: bool = True) -> StateVector:
    amp = np.asarray(amplitudes, dtype=complex).ravel()
    if normalize:
        nrm = np.linalg.norm(amp)
        if nrm == 0:
            raise DomainError("cannot normalize the zero vector")
        amp = amp / nrm
    return StateVector(amp, basis)


def fock_state(n1: int, n2: int, basis: FockBasis) -> StateVector:
    amp = np.zeros(basis.dim, dtype=complex)
    amp[basis.index(n1, n2)] = 1.0
    return StateVector(amp, basis)


def _coherent_column(alpha: complex, d: int) -> np.ndarray:
    n = np.arange(d)
    if alpha == 0:
        col = np.zeros(d, dtype=complex)
        col[0] = 1.0
        return col
    # log-space Poisson amplitudes avoid overflow of alpha**n / sqrt(n!)
    logmag = n * np.log(abs(alpha)) - 0.5 * gammaln(n + 1) - 0.5 * abs(alpha) ** 2
    return np.exp(logmag) * np.exp(1j * n * np.angle(alpha))


def coherent_truncation_weight(alpha1: complex, alpha2: complex, m_cut: int) -> float:
    """Probability of ``|alpha1, alpha2>`` lying outside ``n_i <= m_cut``."""
    d = m_cut + 1
    k1 = float(np.sum(np.abs(_coherent_column(alpha1, d)) ** 2))
    k2 = float(np.sum(np.abs(_coherent_column(alpha2, d)) ** 2))
    # 1 - k1 k2 computed without cancellation
    return max(0.0, (1.0 - k1) + (1.0 - k2) - (1.0 - k1) * (1.0 - k2))


def required_m_cut(alpha1: complex, alpha2: complex, threshold: float = TRUNCATION_THRESHOLD,
                   start: int = 0, limit: int = 400) -> int:
    """Smallest cutoff whose coherent truncation weight is at most ``threshold``."""
    for m in range(start, limit + 1):
        if coherent_truncation_weight(alpha1, alpha2, m) <= threshold:
            return m
    raise DomainError(f"no cutoff up to {limit} reaches truncation weight {threshold:g}")


def coherent_state(alpha1: complex, alpha2: complex, basis: FockBasis,
                   threshold: float | None = TRUNCATION_THRESHOLD) -> StateVector:
    """Truncated, renormalized product coherent state ``|alpha1, alpha2>``.

    Raises :class:`TruncationError` when more than ``threshold`` of the
    probability falls beyond the cutoff; pass ``threshold=None`` to skip the
    check (the weight is still recorded).
    """
    c1 = _coherent_column(complex(alpha1), basis.d)
    c2 = _coherent_column(complex(alpha2), basis.d)
    weight = coherent_truncation_weight(alpha1, alpha2, basis.m_cut)
    if threshold is not None and weight > threshold:
        need = required_m_cut(alpha1, alpha2, threshold, start=basis.m_cut)
        raise TruncationError(
            f"coherent state truncation weight {weight:.3e} exceeds {threshold:g} "
            f"at m_cut={basis.m_cut}; use m_cut >= {need}",
            weight=weight, required_m_cut=need,
        )
    amp = np.kron(c1, c2)
    amp /= np.linalg.norm(amp)
    return StateVector(amp, basis, truncation_weight=weight)


def _check_dims(state: StateVector, eig: EigenSystem) -> None:
    if state.basis.dim != eig.dim:
        raise DomainError(f"state dim {state.basis.dim} does not match eigensystem dim {eig.dim}")


def evolve(state0: StateVector, eig: EigenSystem, t: float) -> StateVector:
    """``|psi(t)> = sum_nu exp(-i E_nu t) <nu|psi0> |nu>``."""
    _check_dims(state0, eig)
    if t == 0:
        return state0
    c = eig.project(state0.amplitudes)
    amp = eig.expand(np.exp(-1j * eig.energies * t) * c)
    return StateVector(amp, state0.basis, state0.truncation_weight)


def evolve_many(state0: StateVector, eig: EigenSystem, times: Sequence[float]) -> list[StateVector]:
    """Evolve to every time in ``times`` with one projection and one batched expansion."""
    _check_dims(state0, eig)
    times = np.asarray(times, dtype=float)
    c = eig.project(state0.amplitudes)
    phases = np.exp(-1j * np.outer(eig.energies, times))
    amps = eig.expand(phases * c[:, None])
    out = []
    for j, t in enumerate(times):
        if t == 0:
            out.append(state0)
        else:
            out.append(StateVector(amps[:, j].copy(), state0.basis, state0.truncation_weight))
    return out


def time_series(state0: StateVector, eig: EigenSystem, observables: Sequence[Operator],
                grid: TimeGrid | Sequence[float]) -> np.ndarray:
    """``<psi(t)|O|psi(t)>`` with shape ``(n_times, n_observables)``."""
    times = grid.times if isinstance(grid, TimeGrid) else np.asarray(grid, dtype=float)
    for op in observables:
        if op.basis != state0.basis:
            raise DomainError("observable basis differs from the state basis")
    states = evolve_many(state0, eig, times)
    out = np.empty((len(times), len(observables)), dtype=complex)
    for i, st in enumerate(states):
        for j, op in enumerate(observables):
            out[i, j] = st.expect(op)
    return out


def time_series_spectral(state0: StateVector, eig: EigenSystem, observables: Sequence[Operator],
                         grid: TimeGrid | Sequence[float]) -> np.ndarray:
    """Same series from the double eigenbasis sum

        <O>_t = sum_{mu,nu} c_mu^* c_nu exp(i (E_mu - E_nu) t) <mu|O|nu>,

    with ``c_nu = <nu|psi0>``.  Quadratic in the dimension; meant as a cross-check.
    """
    _check_dims(state0, eig)
    times = grid.times if isinstance(grid, TimeGrid) else np.asarray(grid, dtype=float)
    c = eig.project(state0.amplitudes)
    out = np.empty((len(times), len(observables)), dtype=complex)
    elems = [eig.matrix_elements(op) for op in observables]
    for i, t in enumerate(times):
        ct = np.exp(-1j * eig.energies * t) * c
        for j, o in enumerate(elems):
            out[i, j] = np.vdot(ct, o @ ct)
    return out
