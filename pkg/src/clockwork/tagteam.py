"""Tag-team circuits and the particle (mode-hopping) model of a circuit.

Each wire segment between gates is a mode holding at most one particle;
the particle of wire ``w`` carries qubit ``w`` as its internal state, so the
internal register is the usual 2**m space. Gate ``j`` moves the particles
from its input modes to its output modes while applying ``U_j``:

    A_j = a_out1^dag a_in1 a_out2^dag a_in2 (x) U_j,    H = sum_j (A_j + A_j^dag)

Basis states are ordered configuration-major,
``index = config * 2**m + b``, matching the clock-major order used for the
pointer model.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .circuit_ir import Circuit, Gate, GATE_TABLE, basis_index, embed_gate, hamming_weight
from .hamiltonian import feynman_operator

__all__ = [
    "StructuralError",
    "BasisOverflowError",
    "TagCircuit",
    "ModeConfiguration",
    "ParticleHamiltonian",
    "EquivalenceReport",
    "tagteam_transform",
    "mode_network",
    "reachable_subspace",
    "build_particle_hamiltonian",
    "equivalence_check",
    "particle_h0",
    "particle_history_state",
]

MAX_MODES = 16
MAX_BASIS = 4096


class StructuralError(ValueError):
    pass


class BasisOverflowError(ValueError):
    pass


@dataclass(frozen=True)
class TagCircuit:
    base: Circuit
    gates: tuple[Gate, ...]
    coupling_choices: tuple[tuple[int, ...], ...]

    def as_circuit(self) -> Circuit:
        return Circuit(self.base.m, self.gates, self.base.answer_register, self.base.expected_answer)


def _coupling(prev: Gate, nxt: Gate) -> tuple[int, ...]:
    for a in sorted(prev.targets):
        for b in sorted(nxt.targets):
            if a != b:
                return (a, b)
    # both single-qubit gates on one wire: the shared mode already orders them
    return (prev.targets[0],)


def tagteam_transform(circuit: Circuit) -> TagCircuit:
    """Insert an identity coupling gate between every consecutive pair of gates.

    The coupling joins the lowest-index output wire of gate l to the
    lowest-index input wire of gate l+1 (falling back to the next pair when
    those coincide).
    """
    if circuit.g < 2:
        raise StructuralError("tag-team transform needs at least two gates")
    gates: list[Gate] = []
    choices = []
    for prev, nxt in zip(circuit.gates, circuit.gates[1:]):
        pair = _coupling(prev, nxt)
        gates.append(prev)
        tag_mat = GATE_TABLE["TAG"] if len(pair) == 2 else GATE_TABLE["I"]
        gates.append(Gate("TAG", pair, tag_mat))
        choices.append(pair)
    gates.append(circuit.gates[-1])
    return TagCircuit(circuit, tuple(gates), tuple(choices))


# ---------------------------------------------------------------------------
# modes and reachable configurations
# ---------------------------------------------------------------------------

Mode = tuple[int, int]  # (wire, segment)


@dataclass(frozen=True)
class ModeConfiguration:
    """Occupied modes, sorted; the internal qubits live in the 2**m register."""

    occupied: tuple[Mode, ...]

    def bits(self, modes: list[Mode]) -> tuple[int, ...]:
        occ = set(self.occupied)
        return tuple(int(md in occ) for md in modes)

    @property
    def particles(self) -> int:
        return len(self.occupied)


@dataclass(frozen=True)
class _ModeGate:
    inputs: tuple[Mode, ...]
    outputs: tuple[Mode, ...]
    gate: Gate


def mode_network(gates, m: int) -> tuple[list[Mode], list[_ModeGate]]:
    """Modes (wire segments) and the input/output modes of every gate."""
    segment = [0] * m
    modes: list[Mode] = [(w, 0) for w in range(m)]
    net = []
    for gate in gates:
        ins = tuple((w, segment[w]) for w in gate.targets)
        for w in gate.targets:
            segment[w] += 1
            modes.append((w, segment[w]))
        outs = tuple((w, segment[w]) for w in gate.targets)
        net.append(_ModeGate(ins, outs, gate))
    return modes, net


def _gates_of(tag) -> tuple[tuple[Gate, ...], int]:
    if isinstance(tag, TagCircuit):
        return tag.gates, tag.base.m
    if isinstance(tag, Circuit):
        return tag.gates, tag.m
    raise TypeError("expected a TagCircuit or Circuit")


def _forward(config: frozenset, mg: _ModeGate):
    if all(md in config for md in mg.inputs) and not any(md in config for md in mg.outputs):
        return (config - set(mg.inputs)) | set(mg.outputs)
    return None


def _backward(config: frozenset, mg: _ModeGate):
    if all(md in config for md in mg.outputs) and not any(md in config for md in mg.inputs):
        return (config - set(mg.outputs)) | set(mg.inputs)
    return None


def reachable_subspace(tag, initial=None, *, max_basis: int = MAX_BASIS) -> list[ModeConfiguration]:
    """Breadth-first closure of the initial configuration under every A_j and A_j^dag.

    The default initial configuration occupies every circuit-input mode.
    Order is BFS discovery order, gates tried in circuit order.
    """
    gates, m = _gates_of(tag)
    modes, net = mode_network(gates, m)
    if len(modes) > MAX_MODES:
        raise BasisOverflowError(f"{len(modes)} modes exceed the desk-scale limit of {MAX_MODES}")
    start = frozenset((w, 0) for w in range(m)) if initial is None else frozenset(initial)
    order = {w: i for i, w in enumerate(modes)}
    seen = {start: 0}
    queue = deque([start])
    found = [start]
    while queue:
        config = queue.popleft()
        for mg in net:
            for nxt in (_forward(config, mg), _backward(config, mg)):
                if nxt is not None and nxt not in seen:
                    seen[nxt] = len(found)
                    found.append(nxt)
                    queue.append(nxt)
                    if len(found) * 2 ** m > max_basis:
                        raise BasisOverflowError(f"reachable basis exceeds {max_basis} states")
    return [ModeConfiguration(tuple(sorted(c, key=order.__getitem__))) for c in found]


@dataclass
class ParticleHamiltonian:
    m: int
    modes: list[Mode]
    basis: list[ModeConfiguration]
    matrix: sp.csr_matrix
    terms: list[sp.csr_matrix]

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def number_operator(self) -> sp.csr_matrix:
        counts = np.repeat([c.particles for c in self.basis], 2 ** self.m)
        return sp.diags(counts.astype(float), format="csr")

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


def build_particle_hamiltonian(tag, initial=None) -> ParticleHamiltonian:
    """H = sum_j (A_j + A_j^dag) on the reachable hard-core configurations."""
    gates, m = _gates_of(tag)
    modes, net = mode_network(gates, m)
    basis = reachable_subspace(tag, initial)
    index = {frozenset(c.occupied): i for i, c in enumerate(basis)}
    d = 2 ** m
    nconf = len(basis)
    terms = []
    for mg in net:
        u = sp.csr_matrix(embed_gate(mg.gate, m))
        rows, cols = [], []
        for i, conf in enumerate(basis):
            nxt = _forward(frozenset(conf.occupied), mg)
            if nxt is not None and nxt in index:
                rows.append(index[nxt])
                cols.append(i)
        hop = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(nconf, nconf))
        terms.append(sp.kron(hop, u, format="csr"))
    total = sum((a + a.conj().T for a in terms), sp.csr_matrix((nconf * d, nconf * d), dtype=complex))
    return ParticleHamiltonian(m, modes, basis, sp.csr_matrix(total), terms)


def particle_h0(ph: ParticleHamiltonian) -> sp.csr_matrix:
    """Penalty on nonzero internal qubits while the configuration is the initial one."""
    d = 2 ** ph.m
    diag = np.zeros(ph.dim)
    diag[:d] = [hamming_weight(b) for b in range(d)]
    return sp.diags(diag, format="csr")


def _chain_order(ph: ParticleHamiltonian) -> list[tuple[int, np.ndarray]]:
    """(configuration index, cumulative unitary) walking forward from the initial configuration."""
    d = 2 ** ph.m
    out = [(0, np.eye(d, dtype=complex))]
    current, W = 0, np.eye(d, dtype=complex)
    while True:
        step = None
        for a in ph.terms:
            blk = a[:, current * d:(current + 1) * d].tocoo()
            if blk.nnz:
                target = int(blk.row[0]) // d
                step = (target, a[target * d:(target + 1) * d, current * d:(current + 1) * d].toarray())
                break
        if step is None:
            return out
        current, W = step[0], step[1] @ W
        out.append((current, W))


def particle_history_state(ph: ParticleHamiltonian, b=0) -> np.ndarray:
    """Equal-weight superposition over the chain of partially executed circuits."""
    d = 2 ** ph.m
    chain = _chain_order(ph)
    if len(chain) != len(ph.basis):
        raise StructuralError("reachable configurations do not form a single chain")
    psi = np.zeros(ph.dim, dtype=complex)
    idx = basis_index(b, ph.m)
    for conf, W in chain:
        psi[conf * d:(conf + 1) * d] = W[:, idx]
    return psi / np.sqrt(len(chain))


@dataclass(frozen=True)
class EquivalenceReport:
    passed: bool
    max_discrepancy: float
    n_eigenvalues: int
    tolerance: float

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} max_discrepancy={self.max_discrepancy:.3e}"

    def csv_row(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'},{self.max_discrepancy!r},{self.n_eigenvalues},{self.tolerance!r}"


def equivalence_check(tag: TagCircuit, tolerance: float = 1e-8, *, pointer_gates=None) -> EquivalenceReport:
    """Compare the particle-model spectrum with the open-chain pointer model.

    The pointer model runs the base gates with an identity inserted between
    each pair. The particle Hamiltonian enters the final Hamiltonian with a
    minus sign (``1 - H``), so its negated spectrum is compared.
    """
    base = tag.base
    m = base.m
    if pointer_gates is None:
        ident = Gate("I", (0,), GATE_TABLE["I"])
        pointer_gates = []
        for gate in base.gates[:-1]:
            pointer_gates += [gate, ident]
        pointer_gates.append(base.gates[-1])
    if len(pointer_gates) != len(tag.gates):
        raise StructuralError(f"pointer model has {len(pointer_gates)} gates, tag circuit has {len(tag.gates)}")
    hp = feynman_operator(pointer_gates, m, closed=False)
    ph = build_particle_hamiltonian(tag)
    if ph.dim != hp.dim:
        raise StructuralError(f"particle basis has {ph.dim} states, pointer model {hp.dim}")
    ev_p = np.linalg.eigvalsh(-ph.toarray())
    ev_f = np.linalg.eigvalsh(hp.toarray())
    disc = float(np.max(np.abs(ev_p - ev_f)))
    return EquivalenceReport(disc <= tolerance, disc, len(ev_f), tolerance)
