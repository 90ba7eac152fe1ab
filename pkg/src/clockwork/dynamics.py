"""Time evolution of clocked programs and answer-register readout.

Coherent evolution uses a Chebyshev expansion of ``exp(-i H dt)`` built
from matrix-vector products only. Time-dependent schedules take one such
step per ``dt`` with the Hamiltonian frozen at the step midpoint, which is
second order in ``dt``. Thermal relaxation is unravelled into quantum
trajectories (waiting-time Monte Carlo).
"""
from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla
from scipy.special import jv

from .circuit_ir import RingProgram, apply_circuit, basis_index
from .hamiltonian import SparseOperator, SpaceDescriptor, build_feynman, build_h0, build_h1, build_tilt
from .spectral import sector_classify

logger = logging.getLogger(__name__)

__all__ = [
    "StepSizeError",
    "Schedule",
    "Trajectory",
    "ThermalParams",
    "ReadoutResult",
    "ChebyshevPropagator",
    "chebyshev_propagate",
    "evolve_constant",
    "evolve_schedule",
    "quench_dispersion",
    "thermal_relax",
    "wavepacket_run",
    "measure_answer",
    "gaussian_packet",
    "clock_marginal",
    "clock_mass",
    "initial_state",
]

NORM_DRIFT_LIMIT = 1e-4
DENSE_MATVEC_LIMIT = 512


class StepSizeError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# schedules and result records
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Schedule:
    """lambda(t) on [0, T]: ``linear`` (t/T) or ``smoothstep`` (3s^2 - 2s^3)."""

    total_time: float
    shape: str = "linear"

    def __post_init__(self):
        if self.total_time < 0:
            raise ValueError("total time must be >= 0")
        if self.shape not in ("linear", "smoothstep"):
            raise ValueError(f"unknown schedule shape {self.shape!r}")

    def __call__(self, t):
        if self.total_time == 0:
            return np.ones_like(np.asarray(t, dtype=float))[()]
        s = np.clip(np.asarray(t, dtype=float) / self.total_time, 0.0, 1.0)
        if self.shape == "linear":
            return s[()]
        return (s * s * (3.0 - 2.0 * s))[()]


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    norms: np.ndarray
    lambdas: np.ndarray | None = None
    renormalizations: int = 0

    def to_csv(self, ring: RingProgram | None = None, fh=None) -> str:
        buf = io.StringIO() if fh is None else fh
        writer = csv.writer(buf, lineterminator="\n")
        cols = ["time", "lambda", "norm"] + (["weight_correct"] if ring is not None else [])
        writer.writerow(cols)
        lams = self.lambdas if self.lambdas is not None else np.full(len(self.times), np.nan)
        for t, lam, nrm, psi in zip(self.times, lams, self.norms, self.states):
            row = [repr(float(t)), repr(float(lam)), repr(float(nrm))]
            if ring is not None:
                row.append(repr(sector_classify(psi, ring).weight_correct))
            writer.writerow(row)
        return buf.getvalue() if fh is None else ""


@dataclass(frozen=True)
class ThermalParams:
    """Tilted pointer coupled to a bath.

    Downhill hops run at ``gamma``, uphill hops at ``gamma * r`` with
    ``r = exp(-E / temperature)``; ``temperature = 0`` gives ``r = 0``.
    ``hopping`` scales the coherent Feynman term kept alongside the tilt
    (0 means fully incoherent pointer motion).
    """

    E: float
    temperature: float
    gamma: float
    t_max: float
    trajectories: int = 200
    seed: int = 0
    dt: float = 0.05
    hopping: float = 0.0

    def __post_init__(self):
        if not (self.E > 0 and self.gamma > 0 and self.t_max > 0 and self.dt > 0):
            raise ValueError("E, gamma, t_max and dt must be positive")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.trajectories < 1:
            raise ValueError("need at least one trajectory")
        if self.hopping < 0:
            raise ValueError("hopping must be >= 0")

    @property
    def ratio(self) -> float:
        return 0.0 if self.temperature == 0 else math.exp(-self.E / self.temperature)

    @classmethod
    def from_ratio(cls, r: float, *, E: float = 1.0, **kwargs) -> "ThermalParams":
        if not 0 <= r < 1:
            raise ValueError("detailed-balance ratio must lie in [0, 1)")
        temperature = 0.0 if r == 0 else -E / math.log(r)
        return cls(E=E, temperature=temperature, **kwargs)


@dataclass
class ReadoutResult:
    """Answer-register statistics.

    ``p_by_clock`` is the probability of a correct answer conditioned on the
    clock position; ``clock_marginal`` is the clock distribution itself.
    """

    p_correct: float
    p_by_clock: np.ndarray
    clock_marginal: np.ndarray
    arrival_time: float | None = None
    arrival_stderr: float | None = None
    censored: int = 0
    times: np.ndarray | None = None
    p_series: np.ndarray | None = None
    weight_series: np.ndarray | None = None
    window_series: np.ndarray | None = None
    extra: dict = field(default_factory=dict)

    @property
    def p_time_average(self) -> float:
        return float(np.mean(self.p_series)) if self.p_series is not None else self.p_correct

    def to_csv(self, fh=None) -> str:
        buf = io.StringIO() if fh is None else fh
        writer = csv.writer(buf, lineterminator="\n")
        if self.times is None:
            writer.writerow(["clock", "marginal", "p_correct_given_clock"])
            for ell, (mass, p) in enumerate(zip(self.clock_marginal, self.p_by_clock)):
                writer.writerow([ell, repr(float(mass)), repr(float(p))])
        else:
            writer.writerow(["time", "p_correct", "weight_correct", "window_mass"])
            nan = np.full(len(self.times), np.nan)
            for row in zip(self.times, *(s if s is not None else nan for s in
                                         (self.p_series, self.weight_series, self.window_series))):
                writer.writerow([repr(float(x)) for x in row])
        return buf.getvalue() if fh is None else ""


# ---------------------------------------------------------------------------
# propagator
# ---------------------------------------------------------------------------

class ChebyshevPropagator:
    """Cached Chebyshev expansion of exp(-i H dt) for spectra inside [lo, hi]."""

    def __init__(self, dt: float, lo: float, hi: float, tol: float = 1e-15):
        self.dt = dt
        self.center = 0.5 * (hi + lo)
        self.radius = max(0.5 * (hi - lo), 1e-12) * (1 + 1e-9)
        x = self.radius * dt
        kmax = int(x + 12 * max(x, 1.0) ** (1 / 3) + 25)
        coef = jv(np.arange(kmax + 1), x)
        keep = np.nonzero(np.abs(coef) > tol)[0]
        nterms = int(keep[-1]) + 1 if keep.size else 1
        k = np.arange(nterms)
        self.coef = np.where(k == 0, 1.0, 2.0) * (-1j) ** k * coef[:nterms]
        self.phase = np.exp(-1j * self.center * dt)

    def __call__(self, matvec: Callable[[np.ndarray], np.ndarray], psi: np.ndarray) -> np.ndarray:
        if self.dt == 0:
            return psi.copy()
        c, r = self.center, self.radius

        def scaled(v):
            return (matvec(v) - c * v) / r

        prev = psi
        out = self.coef[0] * prev
        if len(self.coef) > 1:
            cur = scaled(psi)
            out = out + self.coef[1] * cur
            for a in self.coef[2:]:
                prev, cur = cur, 2 * scaled(cur) - prev
                out = out + a * cur
        return self.phase * out


def chebyshev_propagate(matvec: Callable[[np.ndarray], np.ndarray], psi: np.ndarray, dt: float,
                        lo: float, hi: float, tol: float = 1e-15) -> np.ndarray:
    """exp(-i H dt) psi for Hermitian H with spectrum inside [lo, hi]."""
    return ChebyshevPropagator(dt, lo, hi, tol)(matvec, psi)


def _fast(op: SparseOperator):
    return op.toarray() if op.dim <= DENSE_MATVEC_LIMIT else op.matrix


def evolve_constant(op: SparseOperator, psi0: np.ndarray, times: Sequence[float]) -> np.ndarray:
    """States exp(-i H t) psi0 at each (ascending) time."""
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) < 0) or (times.size and times[0] < 0):
        raise ValueError("times must be ascending and nonnegative")
    mat = _fast(op)
    lo, hi = op.spectral_bounds()
    out = np.empty((len(times), len(psi0)), dtype=complex)
    psi, t = np.asarray(psi0, dtype=complex), 0.0
    for i, target in enumerate(times):
        psi = chebyshev_propagate(lambda v: mat @ v, psi, target - t, lo, hi)
        t = target
        out[i] = psi
    return out


def initial_state(ring: RingProgram, b=0, ell: int = 0) -> np.ndarray:
    """Basis state |b> (x) |ell>."""
    psi = np.zeros(ring.dim, dtype=complex)
    psi[ell * ring.circuit.dim + basis_index(b, ring.m)] = 1.0
    return psi


def evolve_schedule(ring: RingProgram, eta: float, schedule: Schedule, psi0: np.ndarray,
                    dt: float | None = None, *, n_samples: int = 101,
                    hamiltonian: SparseOperator | None = None) -> Trajectory:
    """Integrate i dpsi/dt = H(lambda(t)) psi for eta H0 + (1-lambda) H1 + lambda H.

    ``dt`` defaults to, and may not exceed, ``0.1 / |H|`` with |H| the
    largest Gershgorin bound along the schedule. ``hamiltonian`` replaces
    the clean Feynman term (e.g. a disordered one).
    """
    space = SpaceDescriptor.of(ring)
    HF = build_feynman(ring) if hamiltonian is None else hamiltonian
    A = eta * build_h0(space) + build_h1(space)
    B = HF - build_h1(space)
    loA, hiA = A.spectral_bounds()
    loB, hiB = B.spectral_bounds()

    def bounds(lam):
        return loA + lam * loB, hiA + lam * hiB

    norm_max = max(max(abs(x) for x in bounds(lam)) for lam in (0.0, 1.0))
    dt_max = 0.1 / norm_max
    if dt is None:
        dt = dt_max
    elif dt > dt_max * (1 + 1e-12):
        raise ValueError(f"dt={dt} exceeds the stability bound 0.1/|H| = {dt_max:.4g}")
    psi = np.asarray(psi0, dtype=complex).copy()
    if abs(np.linalg.norm(psi) - 1) > 1e-10:
        raise ValueError("initial state must be normalized")
    T = schedule.total_time
    nsteps = int(math.ceil(T / dt - 1e-12)) if T > 0 else 0
    h = T / nsteps if nsteps else 0.0
    keep = np.unique(np.round(np.linspace(0, nsteps, max(2, n_samples))).astype(int)) if nsteps else np.array([0])
    Ad, Bd = _fast(A), _fast(B)
    dense = isinstance(Ad, np.ndarray)
    (lo0, hi0), (lo1, hi1) = bounds(0.0), bounds(1.0)
    stepper = ChebyshevPropagator(h, min(lo0, lo1), max(hi0, hi1)) if nsteps else None
    times, states, norms, lams = [], [], [], []
    renorm = 0
    k_next = 0
    for step in range(nsteps + 1):
        if k_next < len(keep) and step == keep[k_next]:
            nrm = float(np.linalg.norm(psi))
            if abs(nrm - 1) > NORM_DRIFT_LIMIT:
                raise StepSizeError(f"norm drifted to {nrm:.8f} at t={step * h:.4g}; reduce dt")
            if abs(nrm - 1) > 1e-12:
                renorm += 1
                logger.info("renormalizing state at t=%.6g (norm %.15f)", step * h, nrm)
                psi = psi / nrm
            times.append(step * h)
            states.append(psi.copy())
            norms.append(nrm)
            lams.append(float(schedule(step * h)))
            k_next += 1
        if step == nsteps:
            break
        lam = float(schedule((step + 0.5) * h))
        if dense:
            Hm = Ad + lam * Bd
            psi = stepper(Hm.dot, psi)
        else:
            psi = stepper(lambda v: Ad @ v + lam * (Bd @ v), psi)
    return Trajectory(np.array(times), np.array(states), np.array(norms), np.array(lams), renorm)


# ---------------------------------------------------------------------------
# readout
# ---------------------------------------------------------------------------

def _answer_target(ring: RingProgram, bits=0) -> np.ndarray:
    """Pure state the answer register should hold after the circuit on ``bits``."""
    circ = ring.circuit
    m, ans = circ.m, list(circ.answer_register)
    rest = [w for w in range(m) if w not in ans]
    out = apply_circuit(circ, bits).reshape((2,) * m)
    mat = np.transpose(out, ans + rest).reshape(2 ** len(ans), 2 ** len(rest))
    if circ.expected_answer is not None and basis_index(bits, m) == 0:
        target = np.zeros(2 ** len(ans), dtype=complex)
        target[int(circ.expected_answer, 2)] = 1.0
        agree = float(np.linalg.norm(target.conj() @ mat) ** 2)
        if agree < 1 - 1e-10:
            raise ValueError(f"circuit oracle gives the expected answer with probability {agree:.6f}")
        return target
    u, s, _ = np.linalg.svd(mat)
    if s[0] ** 2 < 1 - 1e-10:
        raise ValueError("answer register is entangled with the rest; give an 'expect' bitstring")
    return u[:, 0]


def _answer_isometry(ring: RingProgram, bits=0) -> np.ndarray:
    """Matrix A with |A psi_l|^2 = probability that block psi_l carries the answer."""
    circ = ring.circuit
    m, ans = circ.m, list(circ.answer_register)
    rest = [w for w in range(m) if w not in ans]
    target = _answer_target(ring, bits)
    eye = np.eye(circ.dim, dtype=complex).reshape((2,) * m + (circ.dim,))
    eye = np.transpose(eye, ans + rest + [m]).reshape(2 ** len(ans), 2 ** len(rest), circ.dim)
    return np.tensordot(target.conj(), eye, axes=(0, 0))


def clock_marginal(state: np.ndarray, ring: RingProgram) -> np.ndarray:
    blocks = np.asarray(state).reshape(ring.n, ring.circuit.dim)
    return np.sum(np.abs(blocks) ** 2, axis=1)


def clock_mass(state: np.ndarray, ring: RingProgram, positions) -> float:
    marg = clock_marginal(state, ring)
    return float(marg[list(positions)].sum() / marg.sum())


def _correct_by_clock(states: np.ndarray, ring: RingProgram, iso: np.ndarray) -> np.ndarray:
    blocks = np.asarray(states).reshape(-1, ring.n, ring.circuit.dim)
    proj = np.einsum("rd,sld->slr", iso, blocks)
    return np.sum(np.abs(proj) ** 2, axis=2)


def measure_answer(state: np.ndarray, ring: RingProgram, bits=0) -> ReadoutResult:
    """Probability that measuring the answer register gives the oracle answer for input ``bits``."""
    iso = _answer_isometry(ring, bits)
    norm2 = float(np.vdot(state, state).real)
    joint = _correct_by_clock(state, ring, iso)[0] / norm2
    marg = clock_marginal(state, ring) / norm2
    cond = np.divide(joint, marg, out=np.zeros_like(joint), where=marg > 1e-300)
    return ReadoutResult(float(joint.sum()), cond, marg)


def _series(states: np.ndarray, ring: RingProgram, iso: np.ndarray):
    joint = _correct_by_clock(states, ring, iso)
    p = joint.sum(axis=1)
    weights = np.array([sector_classify(s, ring).weight_correct for s in states])
    window = np.array([clock_mass(s, ring, ring.idle_window) for s in states])
    return p, weights, window


def quench_dispersion(ring: RingProgram, wait_time: float, samples: Sequence[float] | None = None,
                      *, hamiltonian: SparseOperator | None = None) -> ReadoutResult:
    """Sudden switch to the Feynman Hamiltonian from |0...0>|l=0>, then wait.

    ``p_correct`` is taken at ``wait_time``; ``p_time_average`` averages
    over the sample grid (default 201 points on [0, wait_time]).
    """
    if wait_time < 0:
        raise ValueError("wait time must be >= 0")
    grid = np.linspace(0.0, wait_time, 201) if samples is None else np.asarray(samples, dtype=float)
    grid = np.unique(np.append(grid, wait_time))
    HF = build_feynman(ring) if hamiltonian is None else hamiltonian
    states = evolve_constant(HF, initial_state(ring), grid)
    iso = _answer_isometry(ring)
    p, weights, window = _series(states, ring, iso)
    final = measure_answer(states[-1], ring)
    return ReadoutResult(final.p_correct, final.p_by_clock, final.clock_marginal, times=grid,
                         p_series=p, weight_series=weights, window_series=window)


def gaussian_packet(ring: RingProgram, k_width: float, k0: float = 0.0, b=0) -> np.ndarray:
    """Gaussian superposition sum_k c_k |b,k> centred on clock position 0.

    ``k_width`` is the standard deviation of the momentum-index
    distribution |c_k|^2; zero selects the single state nearest ``k0``.
    """
    from .spectral import momentum_eigenstate

    n = ring.n
    ks = np.arange(n)
    centred = (ks - k0 + n / 2) % n - n / 2
    if k_width == 0:
        coef = (np.abs(centred) == np.abs(centred).min()).astype(float)
        coef[np.nonzero(coef)[0][1:]] = 0.0
    else:
        coef = np.exp(-centred ** 2 / (4.0 * k_width ** 2))
    psi = sum(c * momentum_eigenstate(ring, b, k) for k, c in zip(ks, coef) if c > 1e-300)
    return psi / np.linalg.norm(psi)


def _first_crossing(times: np.ndarray, values: np.ndarray, level: float) -> float | None:
    hit = np.nonzero(values >= level)[0]
    if not hit.size:
        return None
    i = int(hit[0])
    if i == 0:
        return float(times[0])
    t0, t1, v0, v1 = times[i - 1], times[i], values[i - 1], values[i]
    return float(t0 + (level - v0) * (t1 - t0) / (v1 - v0))


def wavepacket_run(ring: RingProgram, tilt_E: float, k0_width: float, t_max: float, *,
                   k0: float = 0.0, samples: int = 400,
                   hamiltonian: SparseOperator | None = None) -> ReadoutResult:
    """Coherent pointer packet accelerated by the tilt ``-E * ell``.

    Arrival is the first time the idle window holds half the clock mass.
    """
    if not tilt_E > 0:
        raise ValueError("tilt energy must be positive")
    if t_max < 0:
        raise ValueError("t_max must be >= 0")
    space = SpaceDescriptor.of(ring)
    HF = build_feynman(ring) if hamiltonian is None else hamiltonian
    H = HF + build_tilt(space, tilt_E)
    grid = np.linspace(0.0, t_max, samples) if t_max > 0 else np.array([0.0])
    states = evolve_constant(H, gaussian_packet(ring, k0_width, k0), grid)
    iso = _answer_isometry(ring)
    p, weights, window = _series(states, ring, iso)
    arrival = _first_crossing(grid, window, 0.5) if t_max > 0 else None
    final = measure_answer(states[-1], ring)
    return ReadoutResult(final.p_correct, final.p_by_clock, final.clock_marginal,
                         arrival_time=arrival, censored=int(arrival is None), times=grid,
                         p_series=p, weight_series=weights, window_series=window)


# ---------------------------------------------------------------------------
# thermal pointer
# ---------------------------------------------------------------------------

class _NoJumpPropagator:
    """exp(-i H_eff tau) for H_eff = H - (i/2) sum_j L_j^dag L_j."""

    def __init__(self, heff: np.ndarray, dt: float):
        self.heff = heff
        self.diagonal = not np.any(heff - np.diag(np.diag(heff)))
        self.dt = dt
        self._step = self._matrix(dt)

    def _matrix(self, tau: float):
        if self.diagonal:
            return np.exp(-1j * np.diag(self.heff) * tau)
        return sla.expm(-1j * self.heff * tau)

    def apply(self, psi: np.ndarray, tau: float | None = None) -> np.ndarray:
        mat = self._step if tau is None else self._matrix(tau)
        return mat * psi if self.diagonal else mat @ psi


def thermal_relax(ring: RingProgram, params: ThermalParams, *, answer_bits=0,
                  stop_at_arrival: bool = True) -> ReadoutResult:
    """Quantum-trajectory relaxation of the tilted pointer.

    Jump operators ``sqrt(gamma) U_l (x) |l+1><l|`` (downhill) and
    ``sqrt(gamma r) U_l^dag (x) |l><l+1|`` (uphill) act on the bonds
    ``l = 0..n-2``; the wrap bond is excluded because the tilt breaks the
    ring there. Arrival is the first time the idle window holds half the
    clock mass; trajectories that never arrive by ``t_max`` are censored.
    Each trajectory stops at arrival unless ``stop_at_arrival`` is False,
    in which case the returned clock distribution is the ensemble at
    ``t_max``.
    """
    n, d = ring.n, ring.circuit.dim
    space = SpaceDescriptor.of(ring)
    r = params.ratio
    up = np.full(n, params.gamma)
    up[-1] = 0.0
    down = np.full(n, params.gamma * r)
    down[0] = 0.0
    hcoh = build_tilt(space, params.E)
    if params.hopping:
        hcoh = hcoh + params.hopping * build_feynman(ring)
    heff = hcoh.toarray() - 0.5j * np.diag(np.repeat(up + down, d))
    prop = _NoJumpPropagator(heff, params.dt)
    U = ring.gate_matrices
    Udag = [u.conj().T for u in U]
    window = np.zeros(n, dtype=bool)
    window[list(ring.idle_window)] = True
    Wc = ring.cumulative[:, :, 0].conj()

    seeds = np.random.SeedSequence(params.seed).spawn(params.trajectories)
    arrivals = np.full(params.trajectories, np.nan)
    weight_dev = np.zeros(params.trajectories)
    p_final = np.zeros(params.trajectories)
    marg_sum = np.zeros(n)
    cond_sum = np.zeros(n)
    jumps_total = 0
    for j, child in enumerate(seeds):
        rng = np.random.default_rng(child)
        psi = initial_state(ring, answer_bits)
        t = 0.0
        u = rng.random()
        dev = 0.0
        while True:
            step = min(params.dt, params.t_max - t)
            if step <= 1e-15:
                break
            phi = prop.apply(psi) if step == params.dt else prop.apply(psi, step)
            n1 = float(np.vdot(phi, phi).real)
            if n1 <= u:
                n0 = float(np.vdot(psi, psi).real)
                tau = step * math.log(n0 / u) / math.log(n0 / n1) if n1 > 0 else step
                tau = min(max(tau, 0.0), step)
                phi = prop.apply(psi, tau)
                t += tau
                blocks = phi.reshape(n, d)
                mass = np.sum(np.abs(blocks) ** 2, axis=1)
                w = np.concatenate([up * mass, down * mass])
                pick = int(rng.choice(2 * n, p=w / w.sum()))
                new = np.zeros_like(blocks)
                if pick < n:
                    new[pick + 1] = U[pick] @ blocks[pick]
                else:
                    ell = pick - n
                    new[ell - 1] = Udag[ell - 1] @ blocks[ell]
                psi = new.reshape(-1)
                psi /= np.linalg.norm(psi)
                u = rng.random()
                jumps_total += 1
            else:
                psi = phi
                t += step
            q = psi / np.linalg.norm(psi)
            blocks = q.reshape(n, d)
            wc = float(np.sum(np.abs(np.einsum("ld,ld->l", Wc, blocks)) ** 2))
            dev = max(dev, abs(1.0 - wc) if answer_bits == 0 else 0.0)
            marg = np.sum(np.abs(blocks) ** 2, axis=1)
            if np.isnan(arrivals[j]) and marg[window].sum() >= 0.5:
                arrivals[j] = t
                if stop_at_arrival:
                    break
        weight_dev[j] = dev
        q = psi / np.linalg.norm(psi)
        res = measure_answer(q, ring, answer_bits)
        p_final[j] = res.p_correct
        marg_sum += res.clock_marginal
        cond_sum += res.p_by_clock * res.clock_marginal
    arrived = arrivals[~np.isnan(arrivals)]
    censored = int(np.isnan(arrivals).sum())
    if censored:
        logger.warning("%d of %d trajectories reached t_max=%g before arrival", censored,
                       params.trajectories, params.t_max)
    mean = float(arrived.mean()) if arrived.size else None
    stderr = float(arrived.std(ddof=1) / math.sqrt(arrived.size)) if arrived.size > 1 else None
    marg = marg_sum / params.trajectories
    cond = np.divide(cond_sum / params.trajectories, marg, out=np.zeros(n), where=marg > 0)
    return ReadoutResult(float(p_final.mean()), cond, marg, arrival_time=mean, arrival_stderr=stderr,
                         censored=censored,
                         extra={"arrival_times": arrivals, "max_weight_deviation": float(weight_dev.max()),
                                "weight_deviation": weight_dev, "ratio": r, "jumps": jumps_total})
