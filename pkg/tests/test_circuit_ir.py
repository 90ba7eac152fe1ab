from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings

from clockwork import bundled_circuit
from clockwork.circuit_ir import (GATE_TABLE, Circuit, CircuitParseError, Gate, apply_circuit, apply_gate,
                                  basis_index, cumulative_unitaries, embed_gate, format_circuit, pad_ring,
                                  parse_circuit, repeat_circuit)
from clockwork.data import bundled_names

from conftest import circuits

BELL_DOC = """\
# Bell pair
qubits 2
answer 1
H(0)
CNOT(0,1)
"""


def test_parse_bell_document():
    c = parse_circuit(BELL_DOC)
    assert c.m == 2 and c.g == 2
    assert c.answer_register == (1,)
    assert [gt.name for gt in c.gates] == ["H", "CNOT"]


def test_wire_out_of_range_reports_line():
    with pytest.raises(CircuitParseError, match="out of range") as err:
        parse_circuit("qubits 2\nanswer 0\nH(0)\nX(5)\n")
    assert err.value.line == 4


def test_non_unitary_literal_rejected():
    with pytest.raises(CircuitParseError, match="not unitary"):
        parse_circuit("qubits 1\nanswer 0\nMAT(0)=[[1,0],[0,2]]\n")


@pytest.mark.parametrize("doc, fragment", [
    ("answer 0\nX(0)\n", "before 'qubits'"),
    ("qubits 1\nX(0)\n", "missing 'answer'"),
    ("qubits 1\nanswer 0\nFOO(0)\n", "unknown gate"),
    ("qubits 2\nanswer 0\nCNOT(0)\n", "expects 2"),
    ("qubits 2\nanswer 0\nCNOT(1,1)\n", "repeated targets"),
    ("qubits 1\nanswer 0\n", "at least one gate"),
    ("qubits 1\nanswer 3\nX(0)\n", "answer"),
    ("qubits 1\nanswer 0\nMAT(0)=[[1,0],[0]]\n", "ragged"),
])
def test_parse_errors(doc, fragment):
    with pytest.raises(CircuitParseError, match=fragment):
        parse_circuit(doc)


def test_complex_literals():
    c = parse_circuit("qubits 1\nanswer 0\nMAT(0)=[[0.5+0.5i, 0.5-0.5i],[0.5-0.5i, 0.5+0.5i]]\nMAT(0)=[[1,0],[0,i]]\n")
    np.testing.assert_allclose(c.gates[1].matrix, GATE_TABLE["S"])
    sqrt_x = c.gates[0].matrix
    np.testing.assert_allclose(sqrt_x @ sqrt_x, GATE_TABLE["X"], atol=1e-15)


@settings(max_examples=60, deadline=None)
@given(circuits())
def test_format_parse_round_trip(c):
    again = parse_circuit(format_circuit(c))
    assert again == c
    for a, b in zip(again.gates, c.gates):
        assert np.array_equal(a.matrix, b.matrix)


@pytest.mark.parametrize("name", bundled_names())
def test_bundled_circuits_round_trip(name):
    c = bundled_circuit(name)
    assert parse_circuit(format_circuit(c)) == c


def test_apply_single_hadamard():
    c = Circuit(1, (Gate.named("H", 0),), (0,))
    np.testing.assert_allclose(apply_circuit(c, "0"), np.array([1, 1]) / np.sqrt(2), atol=1e-15)


def test_apply_bell_pair():
    out = apply_circuit(bundled_circuit("bell"), "00")
    np.testing.assert_allclose(out, np.array([1, 0, 0, 1]) / np.sqrt(2), atol=1e-15)


def test_wire_zero_is_most_significant():
    c = Circuit(2, (Gate.named("X", 0),), (0,))
    assert np.argmax(np.abs(apply_circuit(c, 0))) == basis_index("10", 2) == 2


@settings(max_examples=50, deadline=None)
@given(circuits())
def test_circuit_then_adjoint_is_identity(c):
    both = Circuit(c.m, c.gates + c.adjoint().gates, c.answer_register)
    for b in range(c.dim):
        out = apply_circuit(both, b)
        ref = np.zeros(c.dim)
        ref[b] = 1
        np.testing.assert_allclose(out, ref, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(circuits())
def test_tensordot_application_matches_embedding(c):
    rng = np.random.default_rng(1)
    psi = rng.normal(size=c.dim) + 1j * rng.normal(size=c.dim)
    for gt in c.gates:
        np.testing.assert_allclose(apply_gate(psi, gt.matrix, gt.targets, c.m), embed_gate(gt, c.m) @ psi,
                                   atol=1e-12)


def test_pad_ring_g2_default():
    c = bundled_circuit("bell")
    ring = pad_ring(c)
    assert ring.n == 8 and ring.idle_count == 4
    names = [gt.name for gt in ring.schedule]
    assert names == ["H", "CNOT", "I", "I", "I", "I", "CNOT^dag", "H^dag"]
    np.testing.assert_allclose(ring.schedule[6].matrix, GATE_TABLE["CNOT"].conj().T)


def test_pad_ring_identity_g1():
    ring = pad_ring(Circuit(1, (Gate.named("I", 0),), (0,)))
    assert ring.n == 4
    for u in ring.gate_matrices:
        np.testing.assert_array_equal(u, np.eye(2))


def test_pad_ring_quarter_fraction():
    c = repeat_circuit(bundled_circuit("flip"), 2)
    c = Circuit(c.m, c.gates[:3], c.answer_register)
    ring = pad_ring(c, Fraction(1, 4))
    assert (ring.n, ring.idle_count) == (8, 2)
    # brute force: smallest idle with idle >= n/4 and n = 2g + idle
    assert min(i for i in range(1, 20) if i >= Fraction(6 + i, 4)) == 2


def test_pad_ring_length_override():
    ring = pad_ring(bundled_circuit("bell"), n=32)
    assert ring.idle_count == 28
    assert list(ring.idle_window) == list(range(2, 30))
    with pytest.raises(ValueError):
        pad_ring(bundled_circuit("bell"), n=4)
    with pytest.raises(ValueError):
        pad_ring(bundled_circuit("bell"), Fraction(1, 1))


def test_cumulative_identity_ring(identity_ring):
    for W in cumulative_unitaries(identity_ring):
        np.testing.assert_array_equal(W, np.eye(2))


def test_cumulative_single_x():
    ring = pad_ring(Circuit(1, (Gate.named("X", 0),), (0,)))
    X, I2 = GATE_TABLE["X"], np.eye(2)
    assert [gt.name for gt in ring.schedule] == ["X", "I", "I", "X^dag"]
    for W, ref in zip(ring.cumulative, [I2, X, X, X]):
        np.testing.assert_allclose(W, ref)


@settings(max_examples=40, deadline=None)
@given(circuits())
def test_ring_closure_and_unitarity(c):
    ring = pad_ring(c)
    assert ring.n == 2 * ring.g + ring.idle_count
    np.testing.assert_allclose(ring.closure, np.eye(c.dim), atol=1e-10)
    for W in ring.cumulative:
        np.testing.assert_allclose(W.conj().T @ W, np.eye(c.dim), atol=1e-10)
    for gt in ring.schedule[ring.g:ring.g + ring.idle_count]:
        assert gt.is_identity


@settings(max_examples=30, deadline=None)
@given(circuits())
def test_cyclic_schedule_returns_basis_states(c):
    ring = pad_ring(c)
    for b in range(c.dim):
        psi = np.zeros(c.dim, dtype=complex)
        psi[b] = 1
        for gt in ring.schedule:
            psi = apply_gate(psi, gt.matrix, gt.targets, c.m)
        assert abs(psi[b]) ** 2 >= 1 - 1e-10


@settings(max_examples=30, deadline=None)
@given(circuits())
def test_answer_register_frozen_in_idle_window(c):
    ring = pad_ring(c)
    ans = list(c.answer_register)
    rest = [w for w in range(c.m) if w not in ans]

    def reduced(W):
        psi = W[:, 0].reshape((2,) * c.m)
        mat = np.transpose(psi, ans + rest).reshape(2 ** len(ans), -1)
        return mat @ mat.conj().T

    ref = reduced(ring.cumulative[ring.g])
    for ell in ring.idle_window:
        np.testing.assert_allclose(reduced(ring.cumulative[ell]), ref, atol=1e-12)


def test_gate_validation():
    with pytest.raises(ValueError):
        Gate("MAT", (0,), np.array([[1, 1], [0, 1]]))
    with pytest.raises(ValueError):
        Circuit(1, (), (0,))
    g = Gate.named("T", 0)
    np.testing.assert_allclose(g.adjoint().matrix @ g.matrix, np.eye(2), atol=1e-15)


def test_expected_answer_checked_against_register():
    with pytest.raises(ValueError):
        Circuit(2, (Gate.named("X", 0),), (0,), "01")
