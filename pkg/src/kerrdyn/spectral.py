"""Certified Hermitian eigendecomposition of truncated Hamiltonians.

The two-mode Hamiltonian only changes ``n1 + n2`` by 0 or 2, so it is block
diagonal in total parity.  :func:`eigendecompose` detects this from the
matrix itself, diagonalizes each sector with LAPACK and keeps the
eigenvectors sector-wise; the dense eigenvector matrix is built only when
asked for.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import DomainError, SpectralError
from .fockspace import FockBasis, Operator

RESIDUAL_RTOL = 1e-9
ORTHO_TOL = 1e-10
DEGENERACY_RTOL = 1e-10
SIGNIFICANT = 1e-6


@dataclass(frozen=True, eq=False)
class SectorBlock:
    rows: np.ndarray  # basis indices spanned by the sector
    cols: np.ndarray  # positions of its eigenvectors in the global ordering
    vectors: np.ndarray  # len(rows) x len(cols)


@dataclass(frozen=True, eq=False)
class EigenSystem:
    energies: np.ndarray
    blocks: tuple[SectorBlock, ...]
    basis: FockBasis
    residual: float
    orthonormality_defect: float

    @property
    def dim(self) -> int:
        return len(self.energies)

    @cached_property
    def vectors(self) -> np.ndarray:
        """Dense eigenvector matrix, column ``nu`` is ``|nu>``."""
        v = np.zeros((self.dim, self.dim), dtype=complex)
        for b in self.blocks:
            v[np.ix_(b.rows, b.cols)] = b.vectors
        return v

    def project(self, psi: np.ndarray) -> np.ndarray:
        """Coefficients ``<nu|psi>``; ``psi`` may carry extra trailing columns."""
        psi = np.asarray(psi)
        out = np.zeros((self.dim,) + psi.shape[1:], dtype=complex)
        for b in self.blocks:
            out[b.cols] = b.vectors.conj().T @ psi[b.rows]
        return out

    def expand(self, coeffs: np.ndarray) -> np.ndarray:
        """Inverse of :meth:`project`."""
        coeffs = np.asarray(coeffs)
        out = np.zeros((self.dim,) + coeffs.shape[1:], dtype=complex)
        for b in self.blocks:
            out[b.rows] = b.vectors @ coeffs[b.cols]
        return out

    def matrix_elements(self, op: Operator) -> np.ndarray:
        """Dense ``<mu|O|nu>`` in the eigenbasis."""
        v = self.vectors
        return v.conj().T @ (op.matrix @ v)

    @classmethod
    def from_dense(cls, energies, vectors, basis: FockBasis, H: Operator | None = None):
        """Wrap an externally supplied decomposition (no reordering)."""
        energies = np.asarray(energies, dtype=float)
        vectors = np.asarray(vectors, dtype=complex)
        idx = np.arange(len(energies))
        if H is not None:
            residual = _residual(H.toarray(), vectors, energies)
        else:
            residual = float("nan")
        return cls(energies, (SectorBlock(idx, idx, vectors),), basis, residual,
                   _ortho_defect(vectors))


@dataclass(frozen=True)
class CertificateReport:
    residual: float
    orthonormality_defect: float
    trace_defect: float
    residual_ok: bool
    orthonormality_ok: bool
    trace_ok: bool

    @property
    def ok(self) -> bool:
        return self.residual_ok and self.orthonormality_ok and self.trace_ok


def _residual(h: np.ndarray, v: np.ndarray, e: np.ndarray) -> float:
    if v.size == 0:
        return 0.0
    r = h @ v - v * e[None, :]
    return float(np.sqrt((np.abs(r) ** 2).sum(axis=0)).max())


def _ortho_defect(v: np.ndarray) -> float:
    if v.size == 0:
        return 0.0
    g = v.conj().T @ v
    g[np.diag_indices_from(g)] -= 1.0
    return float(np.abs(g).max())


def _fix_phase(v: np.ndarray) -> np.ndarray:
    """Make the first near-largest component of each column real positive."""
    mag = np.abs(v)
    top = mag.max(axis=0)
    lead = np.argmax(mag >= top[None, :] * (1.0 - 1e-9), axis=0)
    ph = v[lead, np.arange(v.shape[1])]
    return v * (np.abs(ph) / ph)[None, :]


def _sectors(H: Operator, split: bool) -> list[np.ndarray]:
    if split:
        even, odd = H.basis.parity_sectors()
        if len(odd) and len(even):
            cross = H.matrix[even][:, odd]
            if cross.nnz == 0 or abs(cross).max() == 0:
                return [even, odd]
    return [np.arange(H.basis.dim)]


def eigendecompose(H: Operator, split_parity: bool = True) -> EigenSystem:
    """Full eigendecomposition with residual and orthonormality certificates.

    Energies come out ascending.  Each eigenvector has its largest component
    real positive; inside a degenerate cluster vectors are ordered by the
    index of their first significant component.
    """
    if not H.hermitian:
        raise DomainError("eigendecompose requires an operator flagged Hermitian")
    parts = []
    residual = 0.0
    ortho = 0.0
    for rows in _sectors(H, split_parity):
        hb = H.matrix[rows][:, rows].toarray()
        if not np.isfinite(hb).all():
            raise SpectralError(
                f"non-finite matrix entries in sector of size {len(rows)} "
                f"(basis m_cut={H.basis.m_cut})"
            )
        try:
            e, v = np.linalg.eigh(hb)
        except np.linalg.LinAlgError as exc:
            raise SpectralError(
                f"eigensolver failed on sector of size {len(rows)} "
                f"(basis m_cut={H.basis.m_cut}): {exc}"
            ) from exc
        v = _fix_phase(v)
        residual = max(residual, _residual(hb, v, e))
        ortho = max(ortho, _ortho_defect(v))
        parts.append((rows, e, v))

    energies = np.concatenate([e for _, e, _ in parts])
    sector_id = np.concatenate([np.full(len(e), i) for i, (_, e, _) in enumerate(parts)])
    local = np.concatenate([np.arange(len(e)) for _, e, _ in parts])
    first_sig = np.concatenate([
        rows[np.argmax(np.abs(v) >= SIGNIFICANT, axis=0)] for rows, _, v in parts
    ])

    # energy-major order, then first significant basis index inside clusters
    order = np.argsort(energies, kind="stable")
    scale = max(1.0, float(np.abs(energies).max()) if len(energies) else 1.0)
    tol = DEGENERACY_RTOL * scale
    start = 0
    final = []
    for i in range(1, len(order) + 1):
        if i == len(order) or energies[order[i]] - energies[order[i - 1]] > tol:
            cluster = order[start:i]
            final.extend(cluster[np.argsort(first_sig[cluster], kind="stable")])
            start = i
    final = np.asarray(final, dtype=int)
    position = np.empty_like(final)
    position[final] = np.arange(len(final))

    blocks = []
    for i, (rows, e, v) in enumerate(parts):
        mine = sector_id == i
        cols = position[mine]
        srt = np.argsort(cols)
        # C order so cached and fresh vectors hit the same BLAS path bit for bit
        blocks.append(SectorBlock(rows, cols[srt], np.ascontiguousarray(v[:, local[mine][srt]])))

    eig = EigenSystem(energies[final], tuple(blocks), H.basis, residual, ortho)
    emax = float(np.abs(eig.energies).max()) if eig.dim else 0.0
    if residual > 0 and not residual <= RESIDUAL_RTOL * max(emax, np.finfo(float).tiny):
        raise SpectralError(f"residual {residual:.3e} exceeds {RESIDUAL_RTOL:g} * max|E|")
    if not ortho <= ORTHO_TOL:
        raise SpectralError(f"orthonormality defect {ortho:.3e} exceeds {ORTHO_TOL:g}")
    return eig


def verify(eig: EigenSystem, H: Operator) -> CertificateReport:
    """Recompute all certificates from scratch against ``H``."""
    if eig.dim != H.basis.dim:
        raise DomainError("eigensystem and operator dimensions differ")
    h = H.toarray()
    v = eig.vectors
    e = eig.energies
    residual = _residual(h, v, e)
    ortho = _ortho_defect(v)
    emax = float(np.abs(e).max()) if len(e) else 0.0
    trace_defect = abs(float(e.sum()) - float(np.trace(h).real))
    return CertificateReport(
        residual=residual,
        orthonormality_defect=ortho,
        trace_defect=trace_defect,
        residual_ok=residual <= RESIDUAL_RTOL * emax or residual == 0.0,
        orthonormality_ok=ortho <= ORTHO_TOL,
        trace_ok=trace_defect <= 1e-8 * eig.dim * max(emax, 1e-300),
    )


# -- binary cache -----------------------------------------------------------

_MAGIC = b"KDEIG\x00v1"


def cache_key(params, m_cut: int, split_parity: bool = True) -> str:
    """Content hash of everything that determines the decomposition."""
    fields = [f"{k}={float(v).hex() if v is not None else 'none'}"
              for k, v in sorted(params.as_dict().items())]
    text = "|".join(["kerrdyn-eig", f"m_cut={int(m_cut)}", f"split={int(split_parity)}", *fields])
    return hashlib.sha256(text.encode()).hexdigest()


def save_eigensystem(eig: EigenSystem, path, key: str) -> None:
    """Little-endian layout: magic, u64 dim, u64 m_cut, u64 nblocks, 32-byte hash,
    f64 residual, f64 orthonormality defect, f64[dim] energies, then per block
    u64 n, u64[n] rows, u64[n] cols, f64[2 n n] interleaved vectors."""
    digest = bytes.fromhex(key)
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<QQQ", eig.dim, eig.basis.m_cut, len(eig.blocks)))
        fh.write(digest)
        fh.write(struct.pack("<dd", eig.residual, eig.orthonormality_defect))
        fh.write(np.ascontiguousarray(eig.energies, dtype="<f8").tobytes())
        for b in eig.blocks:
            fh.write(struct.pack("<Q", len(b.rows)))
            fh.write(np.asarray(b.rows, dtype="<u8").tobytes())
            fh.write(np.asarray(b.cols, dtype="<u8").tobytes())
            fh.write(np.ascontiguousarray(b.vectors, dtype="<c16").tobytes())


def load_eigensystem(path, key: str | None = None) -> EigenSystem:
    data = Path(path).read_bytes()
    if data[:8] != _MAGIC:
        raise SpectralError(f"{path}: not an eigensystem cache file")
    off = 8
    dim, m_cut, nblocks = struct.unpack_from("<QQQ", data, off)
    off += 24
    digest = data[off:off + 32].hex()
    off += 32
    if key is not None and digest != key:
        raise SpectralError(f"{path}: cache hash mismatch")
    residual, ortho = struct.unpack_from("<dd", data, off)
    off += 16
    energies = np.frombuffer(data, "<f8", dim, off).astype(float)
    off += 8 * dim
    blocks = []
    for _ in range(nblocks):
        (n,) = struct.unpack_from("<Q", data, off)
        off += 8
        rows = np.frombuffer(data, "<u8", n, off).astype(np.intp)
        off += 8 * n
        cols = np.frombuffer(data, "<u8", n, off).astype(np.intp)
        off += 8 * n
        vecs = np.frombuffer(data, "<c16", n * n, off).reshape(n, n).astype(complex)
        off += 16 * n * n
        blocks.append(SectorBlock(rows, cols, vecs))
    basis = FockBasis(int(m_cut))
    if basis.dim != dim:
        raise SpectralError(f"{path}: inconsistent header")
    return EigenSystem(energies, tuple(blocks), basis, residual, ortho)
