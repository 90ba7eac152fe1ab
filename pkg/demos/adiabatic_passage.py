"""
Adiabatic passage on a one-qubit ring
=====================================

Start in |0>|l=0>, the ground state at lambda = 0, and sweep lambda to 1 with
a smoothstep schedule. The state stays in the correct sector exactly and
ends in the lambda = 1 ground state when T is a few multiples of n^2.
"""
# %%
import numpy as np

from clockwork import Schedule, bundled_circuit, evolve_schedule, measure_answer, pad_ring, sector_classify
from clockwork.dynamics import initial_state
from clockwork.hamiltonian import InterpolationPoint, SpaceDescriptor, build_feynman, build_h0, build_h1, interpolate
from clockwork.spectral import eigensystem

ring = pad_ring(bundled_circuit("flip"), n=8)
space = SpaceDescriptor.of(ring)
eta = 4.0
final_op = interpolate(build_h0(space), build_h1(space), build_feynman(ring), InterpolationPoint(eta, 1.0))
spec = eigensystem(final_op, ring.dim)
ground = spec.eigenvectors[:, spec.eigenvalues <= spec.eigenvalues[0] + 1e-9]

# %%
for factor in (0.5, 2, 10, 50):
    T = factor * ring.n ** 2
    traj = evolve_schedule(ring, eta, Schedule(T, "smoothstep"), initial_state(ring), n_samples=2)
    psi = traj.states[-1]
    overlap = np.sum(np.abs(ground.conj().T @ psi) ** 2)
    print(f"T = {factor:>4} n^2: weight_correct {sector_classify(psi, ring).weight_correct:.12f}  "
          f"ground overlap {overlap:.6f}  p_correct {measure_answer(psi, ring).p_correct:.4f}")

# %%
# the answer is read with probability equal to the clock mass where the
# computation is finished; for the ground state that is the idle share plus
# the uncompute steps that leave the answer intact
print("idle window", list(ring.idle_window))
