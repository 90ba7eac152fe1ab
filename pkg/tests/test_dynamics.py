import math

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp

from clockwork import bundled_circuit, pad_ring
from clockwork.circuit_ir import Circuit, Gate, apply_circuit, basis_index
from clockwork.dynamics import (ChebyshevPropagator, ReadoutResult, Schedule, StepSizeError, ThermalParams,
                                chebyshev_propagate, clock_marginal, clock_mass, evolve_constant, evolve_schedule,
                                gaussian_packet, initial_state, measure_answer, quench_dispersion, thermal_relax,
                                wavepacket_run)
from clockwork.hamiltonian import (SpaceDescriptor, SparseOperator, build_feynman, build_h0, build_h1, build_tilt)
from clockwork.spectral import momentum_eigenstate, sector_classify

from conftest import circuits, random_unitary


def x_chain(g, m=1):
    return Circuit(m, tuple(Gate.named("X", 0) for _ in range(g)), (0,))


# -- schedules -----------------------------------------------------------------

@pytest.mark.parametrize("shape", ["linear", "smoothstep"])
def test_schedule_endpoints_and_monotone(shape):
    s = Schedule(7.0, shape)
    assert s(0.0) == 0.0 and s(7.0) == 1.0
    grid = s(np.linspace(0, 7, 501))
    assert np.all(np.diff(grid) >= 0)
    assert np.all((0 <= grid) & (grid <= 1))


def test_schedule_validation():
    with pytest.raises(ValueError):
        Schedule(-1.0)
    with pytest.raises(ValueError):
        Schedule(1.0, "cubic")
    assert Schedule(0.0)(0.0) == 1.0


# -- propagator ----------------------------------------------------------------

@settings(max_examples=30, deadline=None)
@given(st.integers(2, 40), st.floats(0.0, 30.0), st.integers(0, 2 ** 32 - 1))
def test_chebyshev_matches_expm(d, t, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    h = (a + a.conj().T) / 2
    vals = np.linalg.eigvalsh(h)
    psi = rng.normal(size=d) + 1j * rng.normal(size=d)
    psi /= np.linalg.norm(psi)
    out = chebyshev_propagate(lambda v: h @ v, psi, t, vals[0] - 0.1, vals[-1] + 0.1)
    np.testing.assert_allclose(out, sla.expm(-1j * t * h) @ psi, atol=1e-10)


def test_chebyshev_zero_step_is_identity():
    psi = np.array([1.0, 2.0j])
    np.testing.assert_array_equal(ChebyshevPropagator(0.0, -1, 1)(lambda v: v, psi), psi)


def test_evolve_constant_conserves_norm_and_energy(bell_ring):
    space = SpaceDescriptor.of(bell_ring)
    H = 3.0 * build_h0(space) + 0.4 * build_h1(space) + 0.6 * build_feynman(bell_ring)
    rng = np.random.default_rng(3)
    psi = rng.normal(size=space.dim) + 1j * rng.normal(size=space.dim)
    psi /= np.linalg.norm(psi)
    states = evolve_constant(H, psi, np.linspace(0, 200, 41))
    e0 = H.expectation(psi).real
    for s in states:
        assert abs(np.linalg.norm(s) - 1) <= 1e-6
        assert abs(H.expectation(s).real - e0) <= 1e-6
    np.testing.assert_allclose(states[-1], sla.expm(-200j * H.toarray()) @ psi, atol=1e-9)


def test_evolve_constant_rejects_descending_times(bell_ring):
    with pytest.raises(ValueError):
        evolve_constant(build_feynman(bell_ring), initial_state(bell_ring), [1.0, 0.5])


# -- adiabatic schedules -------------------------------------------------------

def test_identity_ring_passage(identity_ring):
    tr = evolve_schedule(identity_ring, 4.0, Schedule(200.0), initial_state(identity_ring))
    target = momentum_eigenstate(identity_ring, 0, 0)
    assert abs(np.vdot(target, tr.states[-1])) ** 2 >= 0.99
    # dense oracle: piecewise-constant expm on a 4x finer grid
    space = SpaceDescriptor.of(identity_ring)
    A = (4.0 * build_h0(space) + build_h1(space)).toarray()
    B = (build_feynman(identity_ring) - build_h1(space)).toarray()
    steps = 4 * (len(tr.times) - 1) * 20
    h = 200.0 / steps
    psi = initial_state(identity_ring)
    sched = Schedule(200.0)
    for j in range(steps):
        psi = sla.expm(-1j * h * (A + float(sched((j + 0.5) * h)) * B)) @ psi
    assert abs(np.vdot(target, psi)) ** 2 >= 0.99
    assert np.linalg.norm(psi - tr.states[-1]) <= 1e-3


def test_sudden_limit_returns_initial_state(flip_ring):
    psi0 = initial_state(flip_ring)
    tr = evolve_schedule(flip_ring, 4.0, Schedule(0.0), psi0)
    np.testing.assert_array_equal(tr.states[-1], psi0)
    assert sector_classify(tr.states[-1], flip_ring).weight_correct == 1.0


@pytest.mark.parametrize("shape", ["linear", "smoothstep"])
def test_doubling_time_never_lowers_fidelity(flip_ring, shape):
    target = momentum_eigenstate(flip_ring, 0, 0)
    fid = []
    for T in (6.25, 12.5, 25.0, 50.0, 100.0, 200.0):
        tr = evolve_schedule(flip_ring, 4.0, Schedule(T, shape), initial_state(flip_ring))
        fid.append(abs(np.vdot(target, tr.states[-1])) ** 2)
    assert np.all(np.diff(fid) >= -1e-12)


def test_trajectory_records_norm_and_sector(flip_ring):
    tr = evolve_schedule(flip_ring, 4.0, Schedule(30.0, "smoothstep"), initial_state(flip_ring), n_samples=11)
    assert len(tr.times) == 11
    assert np.all(np.abs(tr.norms - 1) <= 1e-6)
    csv_text = tr.to_csv(flip_ring)
    assert csv_text.splitlines()[0] == "time,lambda,norm,weight_correct"
    w = np.array([float(line.split(",")[3]) for line in csv_text.splitlines()[1:]])
    assert np.all(np.abs(w - 1) <= 1e-8)


def test_step_size_bound(flip_ring):
    with pytest.raises(ValueError, match="stability"):
        evolve_schedule(flip_ring, 4.0, Schedule(1.0), initial_state(flip_ring), dt=1.0)


def test_norm_drift_is_reported(flip_ring):
    space = SpaceDescriptor.of(flip_ring)
    leaky = SparseOperator(space, build_feynman(flip_ring).matrix - 0.01j * np.eye(space.dim), hermitian=False)
    with pytest.raises(StepSizeError):
        evolve_schedule(flip_ring, 4.0, Schedule(5.0), initial_state(flip_ring), hamiltonian=leaky)


def test_midpoint_stepper_is_second_order(flip_ring):
    eta, T = 4.0, 10.0
    sched = Schedule(T, "smoothstep")
    space = SpaceDescriptor.of(flip_ring)
    A = (eta * build_h0(space) + build_h1(space)).toarray()
    B = (build_feynman(flip_ring) - build_h1(space)).toarray()
    ref = solve_ivp(lambda t, y: -1j * ((A + float(sched(t)) * B) @ y), (0, T), initial_state(flip_ring),
                    method="DOP853", rtol=1e-13, atol=1e-13).y[:, -1]
    err = [np.linalg.norm(evolve_schedule(flip_ring, eta, sched, initial_state(flip_ring), dt=dt).states[-1] - ref)
           for dt in (0.016, 0.008)]
    assert err[0] / err[1] == pytest.approx(4.0, rel=0.2)


@settings(max_examples=10, deadline=None)
@given(circuits(max_m=2, max_g=2), st.floats(0.5, 10.0))
def test_schedule_preserves_sector_weight(c, T):
    ring = pad_ring(c)
    tr = evolve_schedule(ring, 2.0, Schedule(T, "smoothstep"), initial_state(ring), n_samples=6)
    for s in tr.states:
        assert abs(sector_classify(s, ring).weight_correct - 1.0) <= 1e-8


# -- answer readout ------------------------------------------------------------

@pytest.mark.parametrize("name", ["flip", "parity", "phase_kick"])
def test_momentum_states_give_half(name):
    ring = pad_ring(bundled_circuit(name))
    for k in range(ring.n):
        assert measure_answer(momentum_eigenstate(ring, 0, k), ring).p_correct >= 0.5


def test_idle_window_state_is_certain():
    ring = pad_ring(bundled_circuit("parity"))
    v = momentum_eigenstate(ring, 0, 3).reshape(ring.n, -1)
    v[[ell for ell in range(ring.n) if ell not in ring.idle_window]] = 0
    res = measure_answer(v.reshape(-1), ring)
    assert res.p_correct == pytest.approx(1.0, abs=1e-12)
    assert np.all(res.p_by_clock[list(ring.idle_window)] == pytest.approx(1.0))


def brute_force_p(state, ring, bits):
    """Per-position oracle: run the circuit on the input, compare bitwise on the answer wires."""
    circ, n, d = ring.circuit, ring.n, ring.circuit.dim
    out = apply_circuit(circ, bits)
    good = [idx for idx in range(d) if abs(out[idx]) > 1e-12]
    ans = circ.answer_register
    want = {tuple((idx >> (circ.m - 1 - w)) & 1 for w in ans) for idx in good}
    assert len(want) == 1
    want = want.pop()
    blocks = state.reshape(n, d)
    p = 0.0
    for idx in range(d):
        if tuple((idx >> (circ.m - 1 - w)) & 1 for w in ans) == want:
            p += float(np.sum(np.abs(blocks[:, idx]) ** 2))
    return p


@pytest.mark.parametrize("bits", ["0001", "1010", "1111", "0110"])
def test_incorrect_sector_readout_matches_oracle(bits):
    ring = pad_ring(bundled_circuit("parity"))
    for k in (0, 5, 17):
        v = momentum_eigenstate(ring, bits, k)
        assert measure_answer(v, ring, bits).p_correct == pytest.approx(brute_force_p(v, ring, bits), abs=1e-12)


def test_readout_uses_pure_answer_without_expect():
    ring = pad_ring(bundled_circuit("ghz"))
    state = momentum_eigenstate(ring, 0, 0)
    assert measure_answer(state, ring).p_correct >= 0.5


def test_entangled_answer_register_needs_expect():
    c = Circuit(2, bundled_circuit("bell").gates, (1,))
    ring = pad_ring(c)
    with pytest.raises(ValueError, match="entangled"):
        measure_answer(initial_state(ring), ring)


# -- quench --------------------------------------------------------------------

def test_quench_at_zero_time():
    ring = pad_ring(bundled_circuit("parity"))
    res = quench_dispersion(ring, 0.0)
    ref = measure_answer(initial_state(ring), ring)
    assert res.p_correct == ref.p_correct == pytest.approx(res.p_by_clock[0])


def test_quench_identity_circuit_always_correct(identity_ring):
    res = quench_dispersion(identity_ring, 40.0, np.linspace(0, 40, 41))
    np.testing.assert_allclose(res.p_series, 1.0, atol=1e-12)


def test_quench_preserves_sector_weight():
    ring = pad_ring(bundled_circuit("phase_kick"))
    res = quench_dispersion(ring, 5.0 * ring.n ** 2, np.linspace(0, 5.0 * ring.n ** 2, 101))
    assert np.max(np.abs(res.weight_series - 1)) <= 1e-8
    assert res.p_time_average >= 0.4
    assert res.to_csv().splitlines()[0] == "time,p_correct,weight_correct,window_mass"


# -- wavepacket ----------------------------------------------------------------

def test_wavepacket_matches_single_particle_oracle():
    ring = pad_ring(x_chain(3), n=12)
    E, t_max = 0.7, 9.0
    res = wavepacket_run(ring, E, 1.5, t_max, samples=10)
    n = ring.n
    h = -(np.eye(n, k=1) + np.eye(n, k=-1))
    h[0, -1] = h[-1, 0] = -1
    h -= np.diag(E * np.arange(n))
    c0 = gaussian_packet(ring, 1.5).reshape(n, -1)
    amp = (ring.cumulative.conj()[:, :, 0] * c0).sum(axis=1)
    ref = np.abs(sla.expm(-1j * t_max * h) @ amp) ** 2
    np.testing.assert_allclose(res.clock_marginal, ref, atol=1e-10)


def test_bloch_period_return():
    ring = pad_ring(Circuit(1, (Gate.named("I", 0),), (0,)), n=8)
    E = 4.0
    m0 = clock_marginal(gaussian_packet(ring, 2.0), ring)
    full = wavepacket_run(ring, E, 2.0, 2 * np.pi / E, samples=50)
    half = wavepacket_run(ring, E, 2.0, np.pi / E, samples=50)
    assert np.max(np.abs(full.clock_marginal - m0)) <= 0.02
    assert np.max(np.abs(half.clock_marginal - m0)) >= 0.3


def test_zero_width_packet_drifts():
    ring = pad_ring(x_chain(2), n=16)
    res = wavepacket_run(ring, 0.5, 0.0, 20.0, samples=200)
    assert res.arrival_time is not None and math.isfinite(res.arrival_time)
    assert np.max(np.abs(res.clock_marginal - 1 / 16)) > 0.01
    assert np.max(np.abs(res.weight_series - 1)) <= 1e-8


def test_wavepacket_zero_horizon_censored(flip_ring):
    res = wavepacket_run(flip_ring, 1.0, 1.0, 0.0)
    assert res.arrival_time is None and res.censored == 1
    with pytest.raises(ValueError):
        wavepacket_run(flip_ring, 0.0, 1.0, 1.0)


def test_gaussian_packet_is_correct_sector(bell_ring):
    psi = gaussian_packet(bell_ring, 1.0, k0=2)
    assert np.linalg.norm(psi) == pytest.approx(1.0)
    assert sector_classify(psi, bell_ring).weight_correct == pytest.approx(1.0)


# -- thermal -------------------------------------------------------------------

def birth_death_mean(g, r, gamma=1.0):
    """Mean first passage 0 -> g on a chain reflecting at 0: tau_j = 1/gamma + r tau_{j-1}."""
    tau, total = 0.0, 0.0
    for _ in range(g):
        tau = 1.0 / gamma + r * tau
        total += tau
    return total


def test_thermal_params():
    p = ThermalParams.from_ratio(0.1, E=0.5, gamma=1.0, t_max=10.0)
    assert p.ratio == pytest.approx(0.1)
    assert ThermalParams(E=1, temperature=0, gamma=1, t_max=1).ratio == 0.0
    for bad in (dict(E=0, temperature=1, gamma=1, t_max=1), dict(E=1, temperature=-1, gamma=1, t_max=1),
                dict(E=1, temperature=1, gamma=1, t_max=1, trajectories=0)):
        with pytest.raises(ValueError):
            ThermalParams(**bad)
    with pytest.raises(ValueError):
        ThermalParams.from_ratio(1.0, gamma=1, t_max=1)


@pytest.mark.parametrize("g, r, gamma", [(1, 0.0, 1.0), (3, 0.0, 2.0), (4, 0.3, 1.0)])
def test_thermal_arrival_matches_birth_death_chain(g, r, gamma):
    ring = pad_ring(x_chain(g) if g > 1 else Circuit(1, (Gate.named("I", 0),), (0,)))
    params = ThermalParams.from_ratio(r, E=1.0, gamma=gamma, t_max=50.0 * g, trajectories=2000, seed=11)
    res = thermal_relax(ring, params)
    assert res.censored == 0
    assert abs(res.arrival_time - birth_death_mean(g, r, gamma)) <= 4 * res.arrival_stderr
    assert res.extra["max_weight_deviation"] <= 1e-12


def test_thermal_zero_temperature_scales_linearly():
    means = [thermal_relax(pad_ring(x_chain(g)), ThermalParams(E=1.0, temperature=0.0, gamma=1.0, t_max=100.0,
                                                               trajectories=300, seed=2)).arrival_time
             for g in (2, 4, 8)]
    assert means[2] / means[0] == pytest.approx(4.0, rel=0.2)


def test_thermal_is_reproducible():
    ring = pad_ring(x_chain(2), n=8)
    params = ThermalParams.from_ratio(0.2, gamma=1.0, t_max=30.0, trajectories=30, seed=99, hopping=0.5)
    a, b = thermal_relax(ring, params), thermal_relax(ring, params)
    np.testing.assert_array_equal(a.extra["arrival_times"], b.extra["arrival_times"])
    assert a.p_correct == b.p_correct


def lindblad_clock_populations(ring, params, t):
    """Dense master-equation oracle for the same jump operators and coherent part."""
    n, d = ring.n, ring.circuit.dim
    dim = n * d
    space = SpaceDescriptor.of(ring)
    H = build_tilt(space, params.E).toarray() + params.hopping * build_feynman(ring).toarray()
    jumps = []
    for ell in range(n - 1):
        u = ring.gate_matrices[ell]
        hop = np.zeros((n, n))
        hop[ell + 1, ell] = 1
        jumps.append(math.sqrt(params.gamma) * np.kron(hop, u))
        jumps.append(math.sqrt(params.gamma * params.ratio) * np.kron(hop.T, u.conj().T))
    eye = np.eye(dim)
    # row-major vec: vec(A X B) = (A kron B^T) vec(X)
    L = -1j * (np.kron(H, eye) - np.kron(eye, H.T))
    for J in jumps:
        JdJ = J.conj().T @ J
        L += np.kron(J, J.conj()) - 0.5 * np.kron(JdJ, eye) - 0.5 * np.kron(eye, JdJ.T)
    psi = initial_state(ring)
    rho = np.outer(psi, psi.conj()).reshape(-1)
    rho_t = (sla.expm(L * t) @ rho).reshape(dim, dim)
    return np.real(np.diag(rho_t)).reshape(n, d).sum(axis=1), np.real(np.trace(rho_t))


def test_trajectories_reproduce_master_equation():
    ring = pad_ring(bundled_circuit("flip"), n=6)
    params = ThermalParams.from_ratio(0.25, E=0.6, gamma=0.8, t_max=3.0, trajectories=1500, seed=5,
                                      hopping=0.7, dt=0.05)
    res = thermal_relax(ring, params, stop_at_arrival=False)
    ref, trace = lindblad_clock_populations(ring, params, params.t_max)
    assert trace == pytest.approx(1.0, abs=1e-10)
    assert abs(res.clock_marginal.sum() - 1.0) <= 1e-3
    # four standard errors of a [0, 1] variable over 1500 samples
    assert np.max(np.abs(res.clock_marginal - ref)) <= 4 * 0.5 / math.sqrt(1500)


def test_wavepacket_overtakes_thermal_pointer():
    for n in (8, 16):
        ring = pad_ring(x_chain(n // 4), n=n)
        E = 8.0 / n
        th = thermal_relax(ring, ThermalParams.from_ratio(0.1, E=E, gamma=1.0, t_max=20.0 * n, seed=0))
        wp = wavepacket_run(ring, E, n / 16, 4.0 * n)
        assert wp.arrival_time is not None and wp.arrival_time <= th.arrival_time


def test_readout_result_csv():
    res = ReadoutResult(0.5, np.array([1.0, 0.0]), np.array([0.5, 0.5]))
    assert res.to_csv().splitlines() == ["clock,marginal,p_correct_given_clock", "0,0.5,1.0", "1,0.5,0.0"]
    assert res.p_time_average == 0.5


def test_clock_mass(flip_ring):
    psi = momentum_eigenstate(flip_ring, 0, 1)
    assert clock_mass(psi, flip_ring, range(flip_ring.n)) == pytest.approx(1.0)
    assert clock_mass(psi, flip_ring, flip_ring.idle_window) == pytest.approx(0.5)
    assert basis_index("1", 1) == 1
