import numpy as np
import pytest
from hypothesis import strategies as st

from clockwork import bundled_circuit, pad_ring
from clockwork.circuit_ir import GATE_TABLE, Circuit, Gate

ONE_QUBIT = ["I", "X", "Y", "Z", "H", "S", "T"]
TWO_QUBIT = ["CNOT", "CZ", "SWAP"]


def random_unitary(rng, d):
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


@st.composite
def gates(draw, m):
    if m >= 2 and draw(st.booleans()):
        a, b = draw(st.permutations(range(m)))[:2]
        if draw(st.integers(0, 3)) == 0:
            rng = np.random.default_rng(draw(st.integers(0, 2 ** 32 - 1)))
            return Gate("MAT", (a, b), random_unitary(rng, 4))
        return Gate.named(draw(st.sampled_from(TWO_QUBIT)), a, b)
    w = draw(st.integers(0, m - 1))
    if draw(st.integers(0, 3)) == 0:
        rng = np.random.default_rng(draw(st.integers(0, 2 ** 32 - 1)))
        return Gate("MAT", (w,), random_unitary(rng, 2))
    return Gate.named(draw(st.sampled_from(ONE_QUBIT)), w)


@st.composite
def circuits(draw, max_m=3, max_g=4):
    m = draw(st.integers(1, max_m))
    gs = tuple(draw(gates(m)) for _ in range(draw(st.integers(1, max_g))))
    answer = tuple(sorted(draw(st.sets(st.integers(0, m - 1), min_size=1))))
    return Circuit(m, gs, answer, None)


@pytest.fixture
def bell_ring():
    return pad_ring(bundled_circuit("bell"), n=8)


@pytest.fixture
def flip_ring():
    return pad_ring(bundled_circuit("flip"), n=8)


@pytest.fixture
def identity_ring():
    return pad_ring(Circuit(1, (Gate.named("I", 0),), (0,)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one verdict line per acceptance criterion, printed after the run
CRITERIA: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(CRITERIA):
        terminalreporter.write_line(CRITERIA[key])
