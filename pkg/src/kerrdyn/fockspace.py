"""Truncated two-mode Fock basis and the ladder-operator matrices built on it.

Occupations run ``0 .. m_cut`` inclusive in each mode, so a single mode has
``d = m_cut + 1`` states and the product space has ``d**2``.  The product
state ``|n1, n2>`` sits at index ``n1 * d + n2``, i.e. a state vector
reshaped to ``(d, d)`` is indexed ``[n1, n2]``.

Operators are stored as sparse CSR matrices (ladder matrices are
bidiagonal) and densified only when the eigensolver needs them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np
import scipy.sparse as sp

from .errors import DomainError, OccupationRangeError

HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class FockBasis:
    """Product basis ``{|n1, n2>: 0 <= n_i <= m_cut}``."""

    m_cut: int

    def __post_init__(self):
        if int(self.m_cut) != self.m_cut or self.m_cut < 0:
            raise DomainError(f"m_cut must be a nonnegative integer, got {self.m_cut!r}")

    @property
    def d(self) -> int:
        """Per-mode dimension."""
        return self.m_cut + 1

    @property
    def dim(self) -> int:
        return self.d * self.d

    def index(self, n1: int, n2: int) -> int:
        for n in (n1, n2):
            if not 0 <= n <= self.m_cut:
                raise OccupationRangeError(
                    f"occupation {n} outside 0..{self.m_cut}"
                )
        return n1 * self.d + n2

    def occupations(self, k: int) -> tuple[int, int]:
        if not 0 <= k < self.dim:
            raise OccupationRangeError(f"basis index {k} outside 0..{self.dim - 1}")
        return divmod(k, self.d)

    @cached_property
    def occ1(self) -> np.ndarray:
        """Mode-1 occupation of every basis index."""
        return np.repeat(np.arange(self.d), self.d)

    @cached_property
    def occ2(self) -> np.ndarray:
        return np.tile(np.arange(self.d), self.d)

    def parity_sectors(self) -> tuple[np.ndarray, np.ndarray]:
        """Indices of even and odd total occupation ``n1 + n2``."""
        par = (self.occ1 + self.occ2) % 2
        return np.flatnonzero(par == 0), np.flatnonzero(par == 1)

    def interior(self, margin: int) -> np.ndarray:
        """Boolean mask of states with ``n_i <= m_cut - margin`` in both modes."""
        top = self.m_cut - margin
        return (self.occ1 <= top) & (self.occ2 <= top)

    def top_shell(self) -> np.ndarray:
        """Boolean mask of states with at least one mode at the cutoff."""
        return (self.occ1 == self.m_cut) | (self.occ2 == self.m_cut)


@dataclass(frozen=True, eq=False)
class Operator:
    """A sparse matrix on a :class:`FockBasis`.

    ``hermitian=True`` is a claim that is checked at construction.
    """

    matrix: sp.csr_matrix
    basis: FockBasis
    hermitian: bool = False
    label: str = field(default="", compare=False)

    def __post_init__(self):
        m = sp.csr_matrix(self.matrix, dtype=complex)
        if m.shape != (self.basis.dim, self.basis.dim):
            raise DomainError(
                f"operator shape {m.shape} does not match basis dimension {self.basis.dim}"
            )
        m.sum_duplicates()
        m.eliminate_zeros()
        object.__setattr__(self, "matrix", m)
        if self.hermitian and self.hermiticity_defect() > HERMITIAN_TOL:
            raise DomainError(
                f"operator {self.label or '?'} flagged Hermitian but "
                f"max|M - M^H| = {self.hermiticity_defect():.3e}"
            )

    def hermiticity_defect(self) -> float:
        diff = self.matrix - self.matrix.getH()
        return float(abs(diff).max()) if diff.nnz else 0.0

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    @property
    def H(self) -> "Operator":
        return Operator(self.matrix.getH().tocsr(), self.basis, self.hermitian,
                        label=f"{self.label}^dag" if self.label else "")

    def __matmul__(self, other):
        if isinstance(other, Operator):
            _check_same_basis(self, other)
            return Operator(self.matrix @ other.matrix, self.basis)
        return self.matrix @ other

    def __add__(self, other: "Operator") -> "Operator":
        _check_same_basis(self, other)
        return Operator(self.matrix + other.matrix, self.basis,
                        self.hermitian and other.hermitian)

    def __sub__(self, other: "Operator") -> "Operator":
        _check_same_basis(self, other)
        return Operator(self.matrix - other.matrix, self.basis,
                        self.hermitian and other.hermitian)

    def __mul__(self, scalar) -> "Operator":
        s = complex(scalar)
        return Operator(self.matrix * s, self.basis, self.hermitian and s.imag == 0)

    __rmul__ = __mul__

    def __neg__(self) -> "Operator":
        return self * -1.0

    def expect(self, psi: np.ndarray) -> complex:
        """``<psi|M|psi>`` for a raw amplitude vector."""
        return complex(np.vdot(psi, self.matrix @ psi))

    def element(self, bra: tuple[int, int], ket: tuple[int, int]) -> complex:
        return complex(self.matrix[self.basis.index(*bra), self.basis.index(*ket)])


def _check_same_basis(a: Operator, b: Operator) -> None:
    if a.basis != b.basis:
        raise DomainError("operators live on different bases")


def _single_mode_lowering(d: int) -> sp.csr_matrix:
    return sp.diags(np.sqrt(np.arange(1, d, dtype=float)), 1, shape=(d, d), format="csr")


def embed(single: sp.spmatrix, basis: FockBasis, mode: int) -> sp.csr_matrix:
    """Tensor a ``d x d`` single-mode matrix into the product space."""
    eye = sp.identity(basis.d, format="csr")
    if mode == 1:
        return sp.kron(single, eye, format="csr")
    if mode == 2:
        return sp.kron(eye, single, format="csr")
    raise DomainError(f"mode must be 1 or 2, got {mode!r}")


@lru_cache(maxsize=64)
def identity(basis: FockBasis) -> Operator:
    return Operator(sp.identity(basis.dim, format="csr"), basis, hermitian=True, label="1")


@lru_cache(maxsize=64)
def annihilator(basis: FockBasis, mode: int) -> Operator:
    """``a_mode`` with ``a|n> = sqrt(n)|n-1>``; ``a^dag`` truncates at ``m_cut``."""
    return Operator(embed(_single_mode_lowering(basis.d), basis, mode), basis,
                    label=f"a{mode}")


def creator(basis: FockBasis, mode: int) -> Operator:
    return annihilator(basis, mode).H


@lru_cache(maxsize=64)
def number_op(basis: FockBasis, mode: int) -> Operator:
    n = sp.diags(np.arange(basis.d, dtype=float), 0, format="csr")
    return Operator(embed(n, basis, mode), basis, hermitian=True, label=f"N{mode}")


@lru_cache(maxsize=64)
def quadrature_ops(basis: FockBasis, mode: int) -> tuple[Operator, Operator]:
    """Dimensionless ``x = (a + a^dag)/sqrt2`` and ``p = -i(a - a^dag)/sqrt2``.

    The physical prefactors sqrt(hbar/2 m w) and sqrt(hbar m w/2) drop out of
    every variance ratio, so only these are provided.
    """
    a = annihilator(basis, mode).matrix
    ad = a.getH()
    x = (a + ad) / np.sqrt(2.0)
    p = -1j * (a - ad) / np.sqrt(2.0)
    return (Operator(x, basis, hermitian=True, label=f"x{mode}"),
            Operator(p, basis, hermitian=True, label=f"p{mode}"))
