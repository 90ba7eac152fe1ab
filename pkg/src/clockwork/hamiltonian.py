"""Sparse operators on the computer (x) clock space.

The clock is one n-level register, not n unary qubits; the illegal unary
states are never coupled, so dropping them is exact. Basis states are
ordered clock-major, ``index = ell * 2**m + b``, so the clock-``ell`` block of
a state vector is the contiguous slice ``psi[ell*d:(ell+1)*d]``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.io
import scipy.sparse as sp

from .circuit_ir import Gate, RingProgram, embed_gate, hamming_weight

__all__ = [
    "SpaceDescriptor",
    "SpaceMismatchError",
    "SparseOperator",
    "InterpolationPoint",
    "feynman_operator",
    "build_feynman",
    "build_h0",
    "build_h1",
    "build_tilt",
    "interpolate",
    "build_chain",
    "add_hopping_disorder",
    "sector_transform",
    "write_matrix_market",
    "read_matrix_market",
]


class SpaceMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class SpaceDescriptor:
    """Computer register of ``m`` qubits times an ``n``-position clock.

    ``m = 0`` denotes the bare clock factor used by the reduced chain.
    """

    m: int
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"clock needs at least 2 positions, got {self.n}")
        if self.m < 0:
            raise ValueError(f"qubit count must be >= 0, got {self.m}")

    @property
    def d(self) -> int:
        return 2 ** self.m

    @property
    def dim(self) -> int:
        return self.d * self.n

    @classmethod
    def of(cls, ring: RingProgram) -> "SpaceDescriptor":
        return cls(ring.m, ring.n)


class SparseOperator:
    """Coordinate-sparse complex operator on a :class:`SpaceDescriptor`.

    Entries are kept canonically ordered with duplicates merged; the matrix
    is stored CSR for the matrix-vector product, which is all the dynamics
    needs.
    """

    __slots__ = ("space", "matrix", "hermitian")

    def __init__(self, space: SpaceDescriptor, matrix, hermitian: bool = True):
        mat = sp.csr_matrix(matrix, dtype=complex)
        if mat.shape != (space.dim, space.dim):
            raise SpaceMismatchError(f"matrix shape {mat.shape} does not fit space of dim {space.dim}")
        mat.sum_duplicates()
        mat.sort_indices()
        mat.eliminate_zeros()
        self.space = space
        self.matrix = mat
        self.hermitian = hermitian
        if hermitian and not self.is_hermitian(1e-14):
            raise ValueError("operator flagged Hermitian is not")

    # -- container protocol -------------------------------------------------
    @property
    def dim(self) -> int:
        return self.space.dim

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    def entries(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(rows, cols, values) in canonical row-major order."""
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        return coo.row[order], coo.col[order], coo.data[order]

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def diagonal(self) -> np.ndarray:
        return self.matrix.diagonal()

    def is_hermitian(self, tol: float = 1e-14) -> bool:
        diff = self.matrix - self.matrix.conj().T
        return diff.nnz == 0 or np.max(np.abs(diff.data)) <= tol

    def is_diagonal(self) -> bool:
        rows, cols, _ = self.entries()
        return bool(np.all(rows == cols))

    def spectral_bounds(self) -> tuple[float, float]:
        """Gershgorin interval containing the spectrum of a Hermitian operator."""
        mat = self.matrix
        diag = mat.diagonal().real
        radius = np.asarray(abs(mat).sum(axis=1)).ravel() - np.abs(diag)
        return float(np.min(diag - radius)), float(np.max(diag + radius))

    def norm_bound(self) -> float:
        lo, hi = self.spectral_bounds()
        return max(abs(lo), abs(hi))

    def expectation(self, psi: np.ndarray) -> complex:
        return complex(np.vdot(psi, self.matrix @ psi))

    # -- algebra ------------------------------------------------------------
    def _check(self, other: "SparseOperator"):
        if not isinstance(other, SparseOperator):
            return NotImplemented
        if other.space != self.space:
            raise SpaceMismatchError(f"cannot combine operators on {self.space} and {other.space}")
        return None

    def __matmul__(self, other):
        if isinstance(other, SparseOperator):
            self._check(other)
            return SparseOperator(self.space, self.matrix @ other.matrix, hermitian=False)
        return self.matrix @ other

    def __add__(self, other):
        if (res := self._check(other)) is not None:
            return res
        return SparseOperator(self.space, self.matrix + other.matrix, self.hermitian and other.hermitian)

    def __sub__(self, other):
        if (res := self._check(other)) is not None:
            return res
        return SparseOperator(self.space, self.matrix - other.matrix, self.hermitian and other.hermitian)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        herm = self.hermitian and np.isreal(scalar)
        return SparseOperator(self.space, self.matrix * scalar, herm)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def adjoint(self) -> "SparseOperator":
        return SparseOperator(self.space, self.matrix.conj().T, self.hermitian)

    def commutator_norm(self, other: "SparseOperator") -> float:
        self._check(other)
        comm = self.matrix @ other.matrix - other.matrix @ self.matrix
        return 0.0 if comm.nnz == 0 else float(np.max(np.abs(comm.data)))

    def __repr__(self):
        return f"SparseOperator(m={self.space.m}, n={self.space.n}, nnz={self.nnz})"


@dataclass(frozen=True)
class InterpolationPoint:
    eta: float
    lam: float

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda must lie in [0, 1], got {self.lam}")
        if self.eta < 0:
            raise ValueError(f"eta must be >= 0, got {self.eta}")


def _clock_projector(n: int, i: int, j: int):
    return sp.csr_matrix(([1.0], ([i], [j])), shape=(n, n))


def feynman_operator(gates: Sequence[np.ndarray | Gate], m: int, *, closed: bool = True,
                     hop_scale: Sequence[float] | None = None) -> SparseOperator:
    """-sum_l s_l [ |l+1><l| (x) U_l + h.c. ] over a gate sequence.

    A closed chain has ``len(gates)`` clock positions and wraps ``n-1 -> 0``;
    an open chain has ``len(gates) + 1`` positions and no wrap bond.
    """
    mats = [embed_gate(gt, m) if isinstance(gt, Gate) else np.asarray(gt, dtype=complex) for gt in gates]
    n = len(mats) if closed else len(mats) + 1
    scales = np.ones(len(mats)) if hop_scale is None else np.asarray(hop_scale, dtype=float)
    if scales.shape != (len(mats),):
        raise ValueError("need one hop scale per gate")
    space = SpaceDescriptor(m, n)
    total = sp.csr_matrix((space.dim, space.dim), dtype=complex)
    for ell, (u, s) in enumerate(zip(mats, scales)):
        nxt = (ell + 1) % n
        hop = sp.kron(_clock_projector(n, nxt, ell), sp.csr_matrix(u), format="csr")
        total = total - s * (hop + hop.conj().T)
    return SparseOperator(space, total)


def build_feynman(ring: RingProgram, *, open_chain: bool = False) -> SparseOperator:
    """Feynman clock Hamiltonian of a ring program (wrap bond dropped if ``open_chain``)."""
    if open_chain:
        op = feynman_operator(ring.gate_matrices[:-1], ring.m, closed=False)
        return op
    return feynman_operator(ring.gate_matrices, ring.m, closed=True)


def build_h0(space: SpaceDescriptor) -> SparseOperator:
    """Penalty on nonzero computer bits while the clock sits at position 0."""
    diag = np.zeros(space.dim)
    diag[: space.d] = [hamming_weight(b) for b in range(space.d)]
    return SparseOperator(space, sp.diags(diag, format="csr"))


def build_h1(space: SpaceDescriptor) -> SparseOperator:
    diag = np.zeros(space.dim)
    diag[: space.d] = -1.0
    return SparseOperator(space, sp.diags(diag, format="csr"))


def build_tilt(space: SpaceDescriptor, E: float) -> SparseOperator:
    """Pointer tilt ``-E * ell`` on clock position ``ell``."""
    if not E > 0:
        raise ValueError(f"tilt energy must be positive, got {E}")
    diag = np.repeat(-E * np.arange(space.n, dtype=float), space.d)
    return SparseOperator(space, sp.diags(diag, format="csr"))


def interpolate(H0: SparseOperator, H1: SparseOperator, HF: SparseOperator,
                point: InterpolationPoint) -> SparseOperator:
    """eta*H0 + (1 - lam)*H1 + lam*HF."""
    if not (H0.space == H1.space == HF.space):
        raise SpaceMismatchError("interpolated operators live on different spaces")
    return point.eta * H0 + (1.0 - point.lam) * H1 + point.lam * HF


def build_chain(n: int, lam: float, *, open_chain: bool = False, eta_weight: float = 0.0) -> SparseOperator:
    """Reduced clock-only operator ``(1-lam) H1 + lam H'`` on n sites.

    ``eta_weight`` adds ``eta * hammingWeight(b)`` at site 0, giving the
    chain seen by the sector of input ``b``.
    """
    if n < 2:
        raise ValueError("chain needs n >= 2")
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    space = SpaceDescriptor(0, n)
    bonds = n if not open_chain else n - 1
    rows = np.arange(bonds)
    cols = (rows + 1) % n
    vals = -lam * np.ones(bonds)
    hop = sp.coo_matrix((vals, (rows, cols)), shape=(n, n))
    site0 = sp.coo_matrix(([-(1.0 - lam) + eta_weight], ([0], [0])), shape=(n, n))
    return SparseOperator(space, hop + hop.T + site0)


def add_hopping_disorder(HF: SparseOperator, ring: RingProgram, strength: float, seed: int) -> SparseOperator:
    """Scale hop ``ell`` (both directions) by ``1 + delta_l``, delta uniform in [-eps, eps].

    Only the clock-translation couplings change, so the operator still
    commutes with the sector projectors of ``ring``.
    """
    if strength < 0:
        raise ValueError("disorder strength must be >= 0")
    if HF.space != SpaceDescriptor.of(ring):
        raise SpaceMismatchError("operator and ring disagree on the space")
    n, d = ring.n, ring.circuit.dim
    if n < 3:
        raise ValueError("hop terms are ambiguous on a 2-site ring")
    delta = np.random.default_rng(seed).uniform(-strength, strength, size=n)
    rows, cols, vals = HF.entries()
    lr, lc = rows // d, cols // d
    scale = np.ones(len(vals))
    fwd = lr == (lc + 1) % n
    bwd = lc == (lr + 1) % n
    scale[fwd] = 1.0 + delta[lc[fwd]]
    scale[bwd] = 1.0 + delta[lr[bwd]]
    mat = sp.csr_matrix((vals * scale, (rows, cols)), shape=HF.shape)
    return SparseOperator(HF.space, mat, HF.hermitian)


def sector_transform(ring: RingProgram) -> sp.csr_matrix:
    """V = sum_l |l><l| (x) W_l, mapping the bare frame to the history frame."""
    return sp.block_diag(list(ring.cumulative), format="csr")


def write_matrix_market(op: SparseOperator, path, comment: str = "") -> None:
    header = f"clockwork operator m={op.space.m} n={op.space.n}"
    scipy.io.mmwrite(path, op.matrix.tocoo(), comment=(header + ("\n" + comment if comment else "")),
                     field="complex", precision=17)


def read_matrix_market(path, space: SpaceDescriptor, hermitian: bool = True) -> SparseOperator:
    return SparseOperator(space, scipy.io.mmread(path), hermitian)
