"""Circuits, the ring-shaped clocked program, and the brute-force circuit oracle.

Wire 0 is the most significant bit of a computational basis index, so the
bitstring ``"b0 b1 ... b(m-1)"`` labels basis state ``int("b0b1...", 2)``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "CircuitParseError",
    "Gate",
    "Circuit",
    "RingProgram",
    "GATE_TABLE",
    "parse_circuit",
    "load_circuit",
    "format_circuit",
    "pad_ring",
    "apply_gate",
    "embed_gate",
    "apply_circuit",
    "cumulative_unitaries",
    "repeat_circuit",
    "basis_index",
    "hamming_weight",
]

UNITARY_TOL = 1e-12

_S2 = 1 / math.sqrt(2)
GATE_TABLE: dict[str, np.ndarray] = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "H": np.array([[_S2, _S2], [_S2, -_S2]], dtype=complex),
    "S": np.array([[1, 0], [0, 1j]], dtype=complex),
    "T": np.array([[1, 0], [0, np.exp(1j * np.pi / 4)]], dtype=complex),
    "CNOT": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
    "CZ": np.diag([1, 1, 1, -1]).astype(complex),
    "SWAP": np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex),
    "TAG": np.eye(4, dtype=complex),
}
for _m in GATE_TABLE.values():
    _m.setflags(write=False)

INLINE = "MAT"


class CircuitParseError(ValueError):
    """Malformed circuit document; carries the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


def _is_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    return np.allclose(u @ u.conj().T, np.eye(u.shape[0]), rtol=0, atol=tol)


@dataclass(frozen=True, eq=False)
class Gate:
    """A 1- or 2-qubit unitary applied to ordered wire indices."""

    name: str
    targets: tuple[int, ...]
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        targets = tuple(int(t) for t in self.targets)
        object.__setattr__(self, "targets", targets)
        mat = np.array(self.matrix, dtype=complex)
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)
        if len(targets) not in (1, 2):
            raise ValueError(f"gate {self.name} must act on 1 or 2 wires, got {targets}")
        if len(set(targets)) != len(targets):
            raise ValueError(f"gate {self.name} has repeated targets {targets}")
        if min(targets) < 0:
            raise ValueError(f"gate {self.name} has a negative wire index")
        if mat.shape != (2 ** len(targets),) * 2:
            raise ValueError(f"gate {self.name} matrix shape {mat.shape} does not match {len(targets)} wire(s)")
        if not _is_unitary(mat):
            raise ValueError(f"gate {self.name} matrix is not unitary")

    @classmethod
    def named(cls, name: str, *targets: int) -> "Gate":
        try:
            mat = GATE_TABLE[name]
        except KeyError:
            raise ValueError(f"unknown gate {name!r}") from None
        return cls(name, targets, mat)

    @property
    def arity(self) -> int:
        return len(self.targets)

    def adjoint(self) -> "Gate":
        name = self.name[:-4] if self.name.endswith("^dag") else self.name + "^dag"
        return Gate(name, self.targets, self.matrix.conj().T)

    def is_identity(self) -> bool:
        return np.array_equal(self.matrix, np.eye(self.matrix.shape[0]))

    def __eq__(self, other):
        if not isinstance(other, Gate):
            return NotImplemented
        return (self.name == other.name and self.targets == other.targets
                and np.array_equal(self.matrix, other.matrix))

    def __hash__(self):
        return hash((self.name, self.targets, self.matrix.tobytes()))


@dataclass(frozen=True, eq=True)
class Circuit:
    """Ordered gate list on ``m`` wires with a designated answer register."""

    m: int
    gates: tuple[Gate, ...]
    answer_register: tuple[int, ...]
    expected_answer: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        object.__setattr__(self, "answer_register", tuple(sorted(set(int(w) for w in self.answer_register))))
        if self.m < 1:
            raise ValueError("a circuit needs at least one wire")
        if not self.gates:
            raise ValueError("a circuit needs at least one gate")
        for gate in self.gates:
            if max(gate.targets) >= self.m:
                raise ValueError(f"gate {gate.name}{gate.targets} addresses a wire outside 0..{self.m - 1}")
        if not self.answer_register:
            raise ValueError("answer register is empty")
        if not all(0 <= w < self.m for w in self.answer_register):
            raise ValueError(f"answer register {self.answer_register} not within 0..{self.m - 1}")
        if self.expected_answer is not None:
            if len(self.expected_answer) != len(self.answer_register) or set(self.expected_answer) - {"0", "1"}:
                raise ValueError(f"expected answer {self.expected_answer!r} does not fit register {self.answer_register}")

    @property
    def g(self) -> int:
        return len(self.gates)

    @property
    def dim(self) -> int:
        return 2 ** self.m

    def adjoint(self) -> "Circuit":
        return Circuit(self.m, tuple(gt.adjoint() for gt in reversed(self.gates)),
                       self.answer_register, None)


# ---------------------------------------------------------------------------
# text format
# ---------------------------------------------------------------------------

_GATE_RE = re.compile(r"^([A-Za-z][A-Za-z0-9_]*)\(\s*(\d+)\s*(?:,\s*(\d+)\s*)?\)\s*(?:=\s*(.+))?$")
_BARE_I = re.compile(r"(^|[+-])i$")


def _parse_complex(token: str) -> complex:
    tok = token.strip().replace(" ", "")
    if not tok:
        raise ValueError("empty number")
    tok = _BARE_I.sub(r"\g<1>1i", tok)
    return complex(tok.replace("i", "j"))


def _parse_matrix(text: str) -> np.ndarray:
    body = text.strip().replace(" ", "")
    if not (body.startswith("[[") and body.endswith("]]")):
        raise ValueError("matrix literal must look like [[a,b],[c,d]]")
    rows = body[2:-2].split("],[")
    mat = [[_parse_complex(x) for x in row.split(",")] for row in rows]
    if len({len(r) for r in mat}) != 1:
        raise ValueError("ragged matrix literal")
    return np.array(mat, dtype=complex)


def _format_real(x: float) -> str:
    return repr(float(x))


def _format_complex(z: complex) -> str:
    re_, im = z.real, z.imag
    if im == 0 and math.copysign(1.0, im) > 0:
        return _format_real(re_)
    sign = "-" if math.copysign(1.0, im) < 0 else "+"
    return f"{_format_real(re_)}{sign}{_format_real(abs(im))}i"


def parse_circuit(text: str) -> Circuit:
    """Parse a circuit document.

    The format is line oriented: ``qubits <m>``, ``answer <i,j,...>``,
    optional ``expect <bitstring>``, then one gate per line as ``NAME(w)``,
    ``NAME(w1,w2)`` or ``MAT(w)=[[a,b],[c,d]]`` with complex literals
    written ``x+yi``. ``#`` starts a comment.
    """
    m = None
    answer = None
    expect = None
    gates: list[Gate] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, _, rest = line.partition(" ")
        key = head.lower()
        if key == "qubits":
            try:
                m = int(rest)
            except ValueError:
                raise CircuitParseError(f"bad qubit count {rest!r}", lineno) from None
            if m < 1:
                raise CircuitParseError("qubit count must be positive", lineno)
            continue
        if key == "answer":
            try:
                answer = tuple(int(w) for w in rest.replace(" ", "").split(","))
            except ValueError:
                raise CircuitParseError(f"bad answer register {rest!r}", lineno) from None
            continue
        if key == "expect":
            expect = rest.strip()
            continue
        match = _GATE_RE.match(line)
        if match is None:
            raise CircuitParseError(f"cannot parse {line!r}", lineno)
        if m is None:
            raise CircuitParseError("gate before 'qubits' header", lineno)
        name, w1, w2, literal = match.groups()
        targets = (int(w1),) if w2 is None else (int(w1), int(w2))
        bad = [w for w in targets if w >= m]
        if bad:
            raise CircuitParseError(f"wire {bad[0]} out of range for {m} qubits", lineno)
        if literal is not None:
            if name != INLINE:
                raise CircuitParseError(f"only {INLINE} takes a matrix literal", lineno)
            try:
                mat = _parse_matrix(literal)
            except ValueError as exc:
                raise CircuitParseError(str(exc), lineno) from None
            if mat.shape != (2 ** len(targets),) * 2:
                raise CircuitParseError(f"matrix shape {mat.shape} does not match {len(targets)} wire(s)", lineno)
            if not _is_unitary(mat):
                raise CircuitParseError("inline matrix is not unitary", lineno)
        else:
            if name not in GATE_TABLE:
                raise CircuitParseError(f"unknown gate {name!r}", lineno)
            mat = GATE_TABLE[name]
            if mat.shape[0] != 2 ** len(targets):
                raise CircuitParseError(f"gate {name} expects {int(math.log2(mat.shape[0]))} wire(s)", lineno)
        try:
            gates.append(Gate(name, targets, mat))
        except ValueError as exc:
            raise CircuitParseError(str(exc), lineno) from None
    if m is None:
        raise CircuitParseError("missing 'qubits' header")
    if answer is None:
        raise CircuitParseError("missing 'answer' header")
    try:
        return Circuit(m, tuple(gates), answer, expect)
    except ValueError as exc:
        raise CircuitParseError(str(exc)) from None


def load_circuit(path) -> Circuit:
    with open(path, encoding="utf-8") as fh:
        return parse_circuit(fh.read())


def format_circuit(circuit: Circuit) -> str:
    lines = [f"qubits {circuit.m}", "answer " + ",".join(str(w) for w in circuit.answer_register)]
    if circuit.expected_answer is not None:
        lines.append(f"expect {circuit.expected_answer}")
    for gate in circuit.gates:
        wires = ",".join(str(w) for w in gate.targets)
        table = GATE_TABLE.get(gate.name)
        if table is not None and np.array_equal(table, gate.matrix):
            lines.append(f"{gate.name}({wires})")
        else:
            rows = ",".join("[" + ",".join(_format_complex(z) for z in row) + "]" for row in gate.matrix)
            lines.append(f"{INLINE}({wires})=[{rows}]")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# state-vector oracle
# ---------------------------------------------------------------------------

def apply_gate(state: np.ndarray, matrix: np.ndarray, targets: Sequence[int], m: int) -> np.ndarray:
    """Apply a k-qubit matrix to the leading 2**m axis of ``state``.

    ``state`` may carry trailing batch dimensions (columns), which lets the
    same routine build full operators from the identity.
    """
    k = len(targets)
    batch = state.shape[1:]
    psi = state.reshape((2,) * m + batch)
    op = np.asarray(matrix).reshape((2,) * (2 * k))
    psi = np.tensordot(op, psi, axes=(list(range(k, 2 * k)), list(targets)))
    psi = np.moveaxis(psi, list(range(k)), list(targets))
    return psi.reshape((2 ** m,) + batch)


def embed_gate(gate: Gate, m: int) -> np.ndarray:
    """Full 2**m x 2**m matrix of ``gate`` on an m-wire register."""
    return apply_gate(np.eye(2 ** m, dtype=complex), gate.matrix, gate.targets, m)


def basis_index(bits: str | int | Sequence[int], m: int) -> int:
    if isinstance(bits, (int, np.integer)):
        idx = int(bits)
    else:
        text = bits if isinstance(bits, str) else "".join(str(int(b)) for b in bits)
        if len(text) != m or set(text) - {"0", "1"}:
            raise ValueError(f"bitstring {bits!r} is not an {m}-bit string")
        idx = int(text, 2)
    if not 0 <= idx < 2 ** m:
        raise ValueError(f"basis index {idx} outside register of {m} qubits")
    return idx


def hamming_weight(b: int) -> int:
    return bin(int(b)).count("1")


def apply_circuit(circuit: Circuit, bits: str | int | Sequence[int] = 0) -> np.ndarray:
    """Run ``circuit`` on a computational basis state by dense gate application."""
    psi = np.zeros(circuit.dim, dtype=complex)
    psi[basis_index(bits, circuit.m)] = 1.0
    for gate in circuit.gates:
        psi = apply_gate(psi, gate.matrix, gate.targets, circuit.m)
    return psi


# ---------------------------------------------------------------------------
# ring program
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RingProgram:
    """Cyclic schedule: forward gates, idle identities, then the adjoints reversed."""

    circuit: Circuit
    n: int
    schedule: tuple[Gate, ...]
    idle_count: int

    def __post_init__(self):
        g = self.circuit.g
        if self.n != 2 * g + self.idle_count or len(self.schedule) != self.n:
            raise ValueError("ring length must equal 2*g + idle_count")
        if self.idle_count < 1:
            raise ValueError("ring needs at least one idle step")

    @property
    def m(self) -> int:
        return self.circuit.m

    @property
    def g(self) -> int:
        return self.circuit.g

    @property
    def dim(self) -> int:
        return self.circuit.dim * self.n

    @property
    def idle_window(self) -> range:
        """Clock positions ``g .. g+idle_count-1`` that sit on identity steps.

        The finished computation is held here; position ``g + idle_count``
        still carries it but already starts the uncomputation.
        """
        return range(self.g, self.g + self.idle_count)

    @cached_property
    def gate_matrices(self) -> tuple[np.ndarray, ...]:
        mats = []
        for gate in self.schedule:
            full = embed_gate(gate, self.m)
            full.setflags(write=False)
            mats.append(full)
        return tuple(mats)

    @cached_property
    def cumulative(self) -> np.ndarray:
        """Array ``W`` of shape (n, 2**m, 2**m) with W[0] = I, W[l+1] = U_l W[l]."""
        d = self.circuit.dim
        W = np.empty((self.n, d, d), dtype=complex)
        W[0] = np.eye(d)
        for ell in range(1, self.n):
            W[ell] = self.gate_matrices[ell - 1] @ W[ell - 1]
        W.setflags(write=False)
        return W

    @cached_property
    def closure(self) -> np.ndarray:
        """W_n, the product of the whole cycle; the identity for a valid ring."""
        return self.gate_matrices[-1] @ self.cumulative[-1]


def _idle_count_for(g: int, idle_fraction: Fraction) -> int:
    # smallest idle >= fraction * (2g + idle)  <=>  idle >= 2g f / (1 - f)
    need = Fraction(2 * g) * idle_fraction / (1 - idle_fraction)
    return max(1, math.ceil(need))


def pad_ring(circuit: Circuit, idle_fraction=Fraction(1, 2), *, n: int | None = None) -> RingProgram:
    """Pad ``circuit`` into a ring: gates, idle identities, adjoints in reverse.

    With ``n`` given the idle count is ``n - 2g`` (used by length sweeps);
    otherwise it is the smallest integer at least ``idle_fraction * n``.
    """
    g = circuit.g
    if n is None:
        frac = Fraction(idle_fraction).limit_denominator(10 ** 6) if not isinstance(idle_fraction, Fraction) else idle_fraction
        if not 0 < frac < 1:
            raise ValueError(f"idle_fraction must lie in (0, 1), got {idle_fraction}")
        idle = _idle_count_for(g, frac)
    else:
        idle = n - 2 * g
        if idle < 1:
            raise ValueError(f"ring of length {n} cannot hold {g} gates, their adjoints and an idle step")
    idle_gate = Gate("I", (0,), GATE_TABLE["I"])
    schedule = (*circuit.gates, *([idle_gate] * idle), *(gt.adjoint() for gt in reversed(circuit.gates)))
    ring = RingProgram(circuit, 2 * g + idle, schedule, idle)
    d = circuit.dim
    if not np.allclose(ring.closure, np.eye(d), rtol=0, atol=1e-10):
        raise ValueError("ring does not close to the identity")
    return ring


def cumulative_unitaries(ring: RingProgram) -> np.ndarray:
    return ring.cumulative


def repeat_circuit(circuit: Circuit, times: int) -> Circuit:
    """Concatenate ``times`` copies of the gate list (the expected answer is dropped)."""
    if times < 1:
        raise ValueError("times must be >= 1")
    return Circuit(circuit.m, circuit.gates * times, circuit.answer_register, None)


def circuit_from_gates(m: int, gates: Iterable[Gate], answer: Iterable[int], expect: str | None = None) -> Circuit:
    return Circuit(m, tuple(gates), tuple(answer), expect)
