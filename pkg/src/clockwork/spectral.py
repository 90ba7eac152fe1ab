"""Eigenanalysis: momentum eigenstates, sector weights, gap profiles, scaling fits.

Every operator built from the Feynman Hamiltonian, the penalties and the
tilt commutes with the sector projectors ``P_b``. Gap profiles exploit this
by rotating into the history frame, where the operator is block diagonal
with one n x n clock block per input ``b``; sector labels are then exact
rather than inferred from eigenvectors of degenerate clusters.
"""
from __future__ import annotations

import csv
import hashlib
import io
import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .circuit_ir import RingProgram, basis_index
from .hamiltonian import (InterpolationPoint, SparseOperator, SpaceDescriptor, build_feynman, build_h0,
                          build_h1, interpolate, sector_transform)

logger = logging.getLogger(__name__)

__all__ = [
    "ConvergenceError",
    "Spectrum",
    "SectorReport",
    "GapPoint",
    "GapProfile",
    "ScalingFit",
    "eigensystem",
    "momentum_eigenstate",
    "sector_classify",
    "sector_expectation",
    "sector_spectrum",
    "gap_scan",
    "scaling_fit",
    "cluster_values",
]

DENSE_LIMIT = 4096
CLUSTER_RTOL = 1e-9
RESIDUAL_RTOL = 1e-8


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float | None = None):
        self.residual = residual
        super().__init__(message if residual is None else f"{message} (achieved residual {residual:.3e})")


@dataclass
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None = None
    residuals: np.ndarray | None = None
    sectors: np.ndarray | None = None

    def __len__(self):
        return len(self.eigenvalues)


@dataclass(frozen=True)
class SectorReport:
    weight_correct: float
    weight_incorrect: float


@dataclass(frozen=True)
class GapPoint:
    lam: float
    gap_total: float
    gap_sector: float
    gap_tower: float
    ground_energy: float


@dataclass
class GapProfile:
    """Gaps of the interpolated Hamiltonian along a lambda grid.

    ``gap_total`` is the distance from the ground cluster to the next
    distinct cluster of the whole spectrum, ``gap_sector`` the distance to
    the lowest incorrect-sector level, ``gap_tower`` the gap inside the
    correct (b=0) sector.
    """

    points: list[GapPoint]
    eta: float
    n: int

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([p.lam for p in self.points])

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(p, name) for p in self.points])

    @property
    def min_gap(self) -> float:
        return float(self.column("gap_total").min())

    @property
    def argmin_lambda(self) -> float:
        return float(self.lambdas[int(np.argmin(self.column("gap_total")))])

    def to_csv(self, fh=None) -> str:
        buf = io.StringIO() if fh is None else fh
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["lambda", "gap_total", "gap_sector", "gap_tower", "ground_energy"])
        for p in sorted(self.points, key=lambda q: q.lam):
            writer.writerow([repr(p.lam), repr(p.gap_total), repr(p.gap_sector), repr(p.gap_tower),
                             repr(p.ground_energy)])
        return buf.getvalue() if fh is None else ""


@dataclass
class ScalingFit:
    pairs: list[tuple[float, float]]
    exponent: float
    prefactor: float
    r_squared: float

    def to_csv(self, fh=None) -> str:
        buf = io.StringIO() if fh is None else fh
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["n", "gap"])
        for n, gap in sorted(self.pairs):
            writer.writerow([repr(n), repr(gap)])
        return buf.getvalue() if fh is None else ""


# ---------------------------------------------------------------------------
# eigensolver
# ---------------------------------------------------------------------------

def _instance_seed(matrix: sp.csr_matrix) -> int:
    h = hashlib.sha256()
    for arr in (matrix.indptr, matrix.indices, matrix.data):
        h.update(np.ascontiguousarray(arr).tobytes())
    return int.from_bytes(h.digest()[:8], "little")


def _lanczos(mat, count, v0, tol, maxiter, deflate=None, shift=0.0):
    dim = mat.shape[0]
    if deflate is None:
        op = mat
    else:
        def mv(v):
            v = np.asarray(v).reshape(-1)
            return mat @ v + shift * (deflate @ (deflate.conj().T @ v))
        op = spla.LinearOperator((dim, dim), matvec=mv, dtype=complex)
    ncv = min(dim, max(2 * count + 1, 40))
    try:
        vals, vecs = spla.eigsh(op, k=count, which="SA", v0=v0, ncv=ncv, tol=tol, maxiter=maxiter)
    except spla.ArpackNoConvergence as exc:
        raise ConvergenceError("Lanczos did not converge") from exc
    order = np.argsort(vals)
    return vals[order], vecs[:, order]


def _lanczos_complete(mat, count, scale, tol, maxiter, max_rounds=8):
    # Single-vector Lanczos can return one copy of an exactly degenerate
    # eigenvalue. Deflate the pairs found so far (shift them above the
    # spectrum) and rerun until nothing new appears below the current cut.
    dim = mat.shape[0]
    rng = np.random.default_rng(_instance_seed(mat))
    v0 = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    vals, vecs = _lanczos(mat, count, v0, tol, maxiter)
    shift = 4.0 * scale
    for _ in range(max_rounds):
        k = min(count, dim - vecs.shape[1] - 2)
        if k < 1:
            break
        v0 = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        v0 -= vecs @ (vecs.conj().T @ v0)
        extra_vals, extra_vecs = _lanczos(mat, k, v0, tol, maxiter, deflate=vecs, shift=shift)
        new = extra_vals < vals[-1] - CLUSTER_RTOL * scale
        if not new.any():
            break
        logger.info("Lanczos deflation recovered %d missed eigenvalue(s)", int(new.sum()))
        vals = np.concatenate([vals, extra_vals[new]])
        vecs = np.concatenate([vecs, extra_vecs[:, new]], axis=1)
        order = np.argsort(vals)[:count]
        vals, vecs = vals[order], vecs[:, order]
        vecs, _ = np.linalg.qr(vecs)
        # re-diagonalize inside the span to keep pairs exact after orthogonalization
        small = vecs.conj().T @ (mat @ vecs)
        vals, rot = np.linalg.eigh(0.5 * (small + small.conj().T))
        vecs = vecs @ rot
    return vals, vecs


def eigensystem(op: SparseOperator | np.ndarray | sp.spmatrix, count: int, *, method: str = "auto",
                vectors: bool = True, tol: float = 0.0, maxiter: int | None = None) -> Spectrum:
    """Lowest ``count`` eigenpairs of a Hermitian operator.

    ``method="auto"`` diagonalizes densely up to dimension 4096 and falls
    back to implicitly restarted Lanczos (ARPACK) above. The Lanczos start
    vector is seeded from a hash of the operator, so runs are reproducible.
    Every returned pair satisfies ``|Hv - ev| <= 1e-8 * |H|``.
    """
    mat = op.matrix if isinstance(op, SparseOperator) else op
    dim = mat.shape[0]
    if not 1 <= count <= dim:
        raise ValueError(f"count must lie in 1..{dim}, got {count}")
    if method == "auto":
        method = "dense" if dim <= DENSE_LIMIT or count >= dim - 1 else "lanczos"
    scale = max(1.0, float(spla.norm(mat, 1) if sp.issparse(mat) else np.linalg.norm(mat, 1)))
    if method == "dense":
        vals, vecs = np.linalg.eigh(mat.toarray() if sp.issparse(mat) else np.asarray(mat))
        vals, vecs = vals[:count], vecs[:, :count]
    elif method == "lanczos":
        if count >= dim - 1:
            raise ValueError("Lanczos needs count < dim - 1; use method='dense'")
        vals, vecs = _lanczos_complete(sp.csr_matrix(mat), count, scale, tol, maxiter)
    else:
        raise ValueError(f"unknown method {method!r}")
    res = np.linalg.norm(mat @ vecs - vecs * vals, axis=0)
    worst = float(res.max())
    if worst > RESIDUAL_RTOL * scale:
        raise ConvergenceError(f"{method} eigenpairs fail the residual contract", worst)
    return Spectrum(np.asarray(vals, dtype=float), vecs if vectors else None, res)


def cluster_values(values: Sequence[float], scale: float = 1.0) -> list[float]:
    """Representatives of eigenvalue clusters (within 1e-9*scale), ascending."""
    vals = np.sort(np.asarray(values, dtype=float))
    tol = CLUSTER_RTOL * max(scale, 1.0)
    reps = [vals[0]]
    for v in vals[1:]:
        if v - reps[-1] > tol:
            reps.append(v)
    return reps


# ---------------------------------------------------------------------------
# momentum eigenstates and sectors
# ---------------------------------------------------------------------------

def momentum_eigenstate(ring: RingProgram, b, k: int) -> np.ndarray:
    """History state (1/sqrt n) sum_l exp(2 pi i k l / n) (W_l|b>) (x) |l>."""
    n, d = ring.n, ring.circuit.dim
    idx = basis_index(b, ring.m)
    phases = np.exp(2j * np.pi * k * np.arange(n) / n) / np.sqrt(n)
    blocks = ring.cumulative[:, :, idx] * phases[:, None]
    return blocks.reshape(n * d)


def _history_amplitudes(state: np.ndarray, ring: RingProgram) -> np.ndarray:
    """Amplitudes in the history frame, shape (n, 2**m): entry [l, b] = <b|W_l^dag psi_l>."""
    n, d = ring.n, ring.circuit.dim
    blocks = np.asarray(state).reshape(n, d)
    return np.einsum("lab,la->lb", ring.cumulative.conj(), blocks)


def sector_classify(state: np.ndarray, ring: RingProgram) -> SectorReport:
    amps = _history_amplitudes(state, ring)
    total = float(np.vdot(state, state).real)
    correct = float(np.sum(np.abs(amps[:, 0]) ** 2)) / total
    correct = min(max(correct, 0.0), 1.0)
    return SectorReport(correct, 1.0 - correct)


def sector_expectation(ring: RingProgram, b, eta: float, k: int = 0) -> float:
    """<b,k| eta H0 |b,k>, evaluated numerically on the full space."""
    psi = momentum_eigenstate(ring, b, k)
    h0 = build_h0(SpaceDescriptor.of(ring))
    return float(eta * h0.expectation(psi).real)


def sector_spectrum(op: SparseOperator, ring: RingProgram, *, check: float = 1e-10) -> Spectrum:
    """Full spectrum with exact sector labels via the history-frame rotation.

    ``op`` must commute with every sector projector of ``ring``; the
    off-block residue after rotation is checked against ``check``.
    """
    n, d = ring.n, ring.circuit.dim
    V = sector_transform(ring)
    rot = (V.conj().T @ op.matrix @ V).toarray().reshape(n, d, n, d)
    vals, labels = [], []
    for b in range(d):
        block = rot[:, b, :, b]
        vals.append(np.linalg.eigvalsh(block))
        labels.append(np.full(n, b))
    mask = np.ones((d, d), dtype=bool)
    np.fill_diagonal(mask, False)
    leak = np.abs(rot.transpose(1, 3, 0, 2)[mask]).max() if d > 1 else 0.0
    if leak > check:
        raise ValueError(f"operator couples sectors (off-block magnitude {leak:.2e})")
    vals = np.concatenate(vals)
    labels = np.concatenate(labels)
    order = np.argsort(vals, kind="stable")
    return Spectrum(vals[order], None, None, labels[order])


def _gaps(spec: Spectrum, scale: float) -> tuple[float, float, float, float]:
    vals, sec = spec.eigenvalues, spec.sectors
    e0 = float(vals[0])
    total = cluster_values(vals, scale)
    gap_total = total[1] - e0 if len(total) > 1 else 0.0
    tower = cluster_values(vals[sec == 0], scale)
    gap_tower = tower[1] - tower[0] if len(tower) > 1 else 0.0
    wrong = vals[sec != 0]
    gap_sector = max(float(wrong.min()) - e0, 0.0) if wrong.size else np.inf
    if abs(gap_sector) <= CLUSTER_RTOL * max(scale, 1.0):
        gap_sector = 0.0
    return float(gap_total), float(gap_sector), float(gap_tower), e0


def gap_scan(ring: RingProgram, eta: float, lambda_grid: Iterable[float]) -> GapProfile:
    """Gap profile of ``eta H0 + (1-lam) H1 + lam H`` over a lambda grid."""
    grid = sorted(set(float(x) for x in lambda_grid))
    if len(grid) < 3:
        raise ValueError("lambda grid needs at least 3 distinct points")
    if grid[0] != 0.0 or grid[-1] != 1.0:
        raise ValueError("lambda grid must include both endpoints 0 and 1")
    if not all(0.0 <= x <= 1.0 for x in grid):
        raise ValueError("lambda grid must lie in [0, 1]")
    space = SpaceDescriptor.of(ring)
    H0, H1, HF = build_h0(space), build_h1(space), build_feynman(ring)
    points = []
    for lam in grid:
        op = interpolate(H0, H1, HF, InterpolationPoint(eta, lam))
        spec = sector_spectrum(op, ring)
        gt, gs, gw, e0 = _gaps(spec, op.norm_bound())
        points.append(GapPoint(lam, gt, gs, gw, e0))
    return GapProfile(points, float(eta), ring.n)


def scaling_fit(pairs: Iterable[tuple[float, float]], *, min_pairs: int = 4) -> ScalingFit:
    """Least-squares fit of ``log gap = a + exponent * log n``."""
    pairs = [(float(n), float(gap)) for n, gap in pairs]
    if len(pairs) < min_pairs:
        raise ValueError(f"need at least {min_pairs} (n, gap) pairs, got {len(pairs)}")
    ns, gaps = np.array(pairs).T
    if np.any(gaps <= 0) or np.any(ns <= 0):
        raise ValueError("scaling fit needs positive n and gaps")
    x, y = np.log(ns), np.log(gaps)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (intercept + slope * x)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum(resid ** 2))
    if ss_tot <= 1e-300:
        slope, r2 = 0.0, 1.0
    else:
        r2 = min(max(1.0 - ss_res / ss_tot, 0.0), 1.0)
    return ScalingFit(pairs, float(slope), float(np.exp(intercept)), float(r2))
