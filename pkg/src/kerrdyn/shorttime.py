"""Second-order short-time expansions and exact initial-rate identities.

Two independent routes produce the Taylor coefficients of the Heisenberg
operator ``a_i(t) = a_i + t A1 + t^2 A2 + O(t^3)``: an explicit term list
(:func:`expansion_terms`) and nested commutators with the truncated
Hamiltonian (:func:`commutator_terms`).  They are compared on the interior
subspace, where truncation cannot reach at second order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .dynamics import StateVector
from .errors import AssemblyError, DomainError
from .fockspace import FockBasis, Operator, annihilator
from .model import ModelParams, build_hamiltonian
from .spectral import EigenSystem

INTERIOR_MARGIN = 4
ASSEMBLY_TOL = 1e-9


def _ladders(basis: FockBasis):
    a1 = annihilator(basis, 1).matrix
    a2 = annihilator(basis, 2).matrix
    return a1, a2, a1.getH().tocsr(), a2.getH().tocsr()


def expansion_terms(params: ModelParams, basis: FockBasis, mode: int) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """First- and second-order coefficients of ``a_mode(t)`` written out term by term."""
    p = params
    w1, w2, l1, l2, b1, b2 = p.omega1, p.omega2, p.lambda1, p.lambda2, p.beta1, p.beta2
    a1, a2, c1, c2 = _ladders(basis)
    if mode == 1:
        first = -1j * w1 * a1 + l1 * a2 + l2 * c2 - 2j * b1 * (c1 @ a1 @ a1)
        second = (
            -(w1**2 + l1**2 - l2**2) * a1
            - 1j * l1 * (w1 + w2) * a2
            - 1j * l2 * (w1 - w2) * c2
            - 4 * b1 * (b1 + w1) * (c1 @ a1 @ a1)
            + 2j * b2 * (c2 @ (-l1 * a2 + l2 * c2) @ a2)
            - 4j * b1 * (c1 @ a1 @ (l1 * a2 + l2 * c2))
            - 2j * b1 * (a1 @ a1 @ (l1 * c2 + l2 * a2))
            - 4 * b1**2 * (c1 @ c1 @ a1 @ a1 @ a1)
        )
    elif mode == 2:
        first = -1j * w2 * a2 - l1 * a1 + l2 * c1 - 2j * b2 * (c2 @ a2 @ a2)
        second = (
            -(w2**2 + l1**2 - l2**2) * a2
            + 1j * l1 * (w1 + w2) * a1
            + 1j * l2 * (w1 - w2) * c1
            - 4 * b2 * (b2 + w2) * (c2 @ a2 @ a2)
            + 2j * b1 * (c1 @ (l1 * a1 + l2 * c1) @ a1)
            + 4j * b2 * (c2 @ a2 @ (l1 * a1 - l2 * c1))
            + 2j * b2 * (a2 @ a2 @ (l1 * c1 - l2 * a1))
            - 4 * b2**2 * (c2 @ c2 @ a2 @ a2 @ a2)
        )
    else:
        raise DomainError(f"mode must be 1 or 2, got {mode!r}")
    return sp.csr_matrix(first), sp.csr_matrix(0.5 * second)


def commutator_terms(params: ModelParams, basis: FockBasis, mode: int) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """``i[H, a]`` and ``-(1/2)[H, [H, a]]`` with the truncated Hamiltonian."""
    h = build_hamiltonian(params, basis).matrix
    a = annihilator(basis, mode).matrix
    c1 = h @ a - a @ h
    c2 = h @ c1 - c1 @ h
    return sp.csr_matrix(1j * c1), sp.csr_matrix(-0.5 * c2)


def _interior_max(m, mask: np.ndarray) -> float:
    sub = m[mask][:, mask]
    if sp.issparse(sub):
        return float(abs(sub).max()) if sub.nnz else 0.0
    return float(np.abs(sub).max()) if sub.size else 0.0


@dataclass(frozen=True, eq=False)
class ShortTimeExpansion:
    order0: Operator
    order1: Operator
    order2: Operator
    mode: int

    @property
    def basis(self) -> FockBasis:
        return self.order0.basis

    def assemble(self, t: float) -> Operator:
        return Operator(self.order0.matrix + t * self.order1.matrix + t * t * self.order2.matrix,
                        self.basis)

    def interior(self, margin: int = INTERIOR_MARGIN) -> np.ndarray:
        return self.basis.interior(margin)


def heisenberg_expansion(params: ModelParams, basis: FockBasis, mode: int,
                         margin: int = INTERIOR_MARGIN) -> ShortTimeExpansion:
    """Second-order expansion of ``a_mode(t)``, cross-checked against commutators."""
    if basis.m_cut < margin:
        raise DomainError(f"m_cut={basis.m_cut} leaves no interior subspace at margin {margin}")
    first, second = expansion_terms(params, basis, mode)
    ref1, ref2 = commutator_terms(params, basis, mode)
    mask = basis.interior(margin)
    for order, mine, ref in ((1, first, ref1), (2, second, ref2)):
        err = _interior_max(mine - ref, mask)
        if err > ASSEMBLY_TOL:
            raise AssemblyError(
                f"order-{order} coefficient of a{mode}(t) differs from the commutator by {err:.3e}"
            )
    return ShortTimeExpansion(
        annihilator(basis, mode),
        Operator(first, basis, label=f"a{mode}'"),
        Operator(second, basis, label=f"a{mode}''/2"),
        mode,
    )


def exact_heisenberg(eig: EigenSystem, op: Operator, t: float) -> np.ndarray:
    """Dense ``exp(iHt) O exp(-iHt)`` from the eigendecomposition."""
    v = eig.vectors
    ph = np.exp(1j * eig.energies * t)
    o = eig.matrix_elements(op)
    return (v * ph[None, :]) @ o @ (v * ph[None, :]).conj().T


def operator_error(expansion: ShortTimeExpansion, eig: EigenSystem, t: float,
                   margin: int = INTERIOR_MARGIN) -> float:
    """Interior max-abs deviation between exact and expanded ``a(t)``."""
    exact = exact_heisenberg(eig, expansion.order0, t)
    approx = expansion.assemble(t).toarray()
    return _interior_max(exact - approx, expansion.basis.interior(margin))


def commutator_defect(exp1: ShortTimeExpansion, exp2: ShortTimeExpansion, t: float,
                      margin: int = INTERIOR_MARGIN) -> float:
    """Largest interior deviation of ``[a_i(t), a_j^dag(t)]`` from ``delta_ij``."""
    ops = {exp1.mode: exp1.assemble(t).matrix, exp2.mode: exp2.assemble(t).matrix}
    mask = exp1.basis.interior(margin)
    eye = sp.identity(exp1.basis.dim, format="csr")
    worst = 0.0
    for i, ai in ops.items():
        for j, aj in ops.items():
            ajd = aj.getH()
            c = ai @ ajd - ajd @ ai
            if i == j:
                c = c - eye
            worst = max(worst, _interior_max(c, mask))
    return worst


def short_time_population(alpha1: float, alpha2: float, params: ModelParams, t: float,
                          mode: int = 1) -> float:
    """``<N_mode(t)>`` to second order for a real coherent product state.

        <N1(t)> = a1^2 + 2 a1 a2 (l1 + l2) t
                  + [(l1 + l2)^2 a2^2 - (l1^2 - l2^2) a1^2 + l2^2] t^2

    Mode 2 follows from the exchange 1 <-> 2, l1 -> -l1.  The t^2 term carries
    no Kerr contribution.
    """
    a1, a2 = float(alpha1), float(alpha2)
    l1, l2 = params.lambda1, params.lambda2
    if mode == 2:
        a1, a2, l1 = a2, a1, -l1
    elif mode != 1:
        raise DomainError(f"mode must be 1 or 2, got {mode!r}")
    return (a1**2 + 2.0 * a1 * a2 * (l1 + l2) * t
            + ((l1 + l2) ** 2 * a2**2 - (l1**2 - l2**2) * a1**2 + l2**2) * t * t)


def initial_rates(alpha1: float, alpha2: float, params: ModelParams) -> dict[str, float]:
    """Exact ``t = 0`` derivatives for a real coherent product state (Kerr-independent)."""
    a1, a2 = float(alpha1), float(alpha2)
    l1, l2 = params.lambda1, params.lambda2
    dn1 = 2.0 * a1 * a2 * (l1 + l2)
    dn2 = 2.0 * a1 * a2 * (-l1 + l2)
    return {
        "dN1": dn1,
        "dN2": dn2,
        "dNtot_half": 2.0 * l2 * a1 * a2,
        "dVarN1": dn1,
        "dVarN2": dn2,
        "dD1": 0.0,
        "dD2": 0.0,
    }


def ehrenfest_check(state: StateVector, params: ModelParams, basis: FockBasis | None = None) -> dict[str, float]:
    """Right-hand sides of the exact rate equations evaluated on ``state``.

    ``dN_i/dt = 2 Re<X_i>`` and ``dVarN_i/dt = 2 Re<{N_i - <N_i>, X_i}>`` with
    ``X_i = (-1)^(i+1) l1 a2^dag a1 + l2 a1 a2``; ``dD_i/dt`` follows by
    subtraction.
    """
    basis = basis or state.basis
    if basis != state.basis:
        raise DomainError("state basis differs from the supplied basis")
    psi = state.amplitudes
    a1, a2, c1, c2 = _ladders(basis)
    hop = c2 @ a1
    pair = a1 @ a2
    hop_psi = hop @ psi
    pair_psi = pair @ psi
    e_hop = complex(np.vdot(psi, hop_psi))
    e_pair = complex(np.vdot(psi, pair_psi))
    l1, l2 = params.lambda1, params.lambda2
    out = {
        "dN1_rhs": 2.0 * (l1 * e_hop + l2 * e_pair).real,
        "dN2_rhs": 2.0 * (-l1 * e_hop + l2 * e_pair).real,
        "dNtot_half_rhs": 2.0 * l2 * e_pair.real,
    }
    for i, (sign, occ) in enumerate(((1.0, basis.occ1), (-1.0, basis.occ2)), start=1):
        x_psi = sign * l1 * hop_psi + l2 * pair_psi
        shifted = (occ - float(np.vdot(psi, occ * psi).real)) * psi
        # <{A, X}> = <A psi|X psi> + <X^dag psi|A psi>; the second is <psi|X A psi>
        anti = np.vdot(shifted, x_psi) + np.vdot(psi, sign * l1 * (hop @ shifted) + l2 * (pair @ shifted))
        out[f"dVarN{i}_rhs"] = 2.0 * float(anti.real)
        out[f"dD{i}_rhs"] = out[f"dVarN{i}_rhs"] - out[f"dN{i}_rhs"]
    return out


def scaling_table(error: Callable[[float], float], times: Sequence[float]) -> list[tuple[float, float, float]]:
    """Rows ``(t, E(t), E(t)/E(t/2))``; a third-order error gives ratios near 8."""
    rows = []
    for t in times:
        e_t = error(t)
        e_half = error(0.5 * t)
        rows.append((float(t), e_t, e_t / e_half if e_half > 0 else float("inf")))
    return rows
