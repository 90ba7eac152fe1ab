"""
Tilted pointer: thermal hopping versus a coherent packet
========================================================

With a tilt -E*l and a bath that hops the clock downhill at rate gamma and
uphill at gamma*r, the mean time to reach the idle window grows linearly in
n. A coherent packet on the same tilted ring gets there faster but is more
sensitive to hopping disorder.
"""
# %%
import numpy as np

from clockwork import ThermalParams, pad_ring, scaling_fit, thermal_relax, wavepacket_run
from clockwork.circuit_ir import Circuit, Gate
from clockwork.dynamics import clock_mass, evolve_constant, gaussian_packet
from clockwork.hamiltonian import add_hopping_disorder, build_feynman


def x_chain(n):
    return pad_ring(Circuit(1, tuple(Gate.named("X", 0) for _ in range(n // 4)), (0,)), n=n)


# %%
pairs = []
for n in (8, 16, 32):
    ring = x_chain(n)
    params = ThermalParams.from_ratio(0.1, E=8.0 / n, gamma=1.0, t_max=20.0 * n, trajectories=200, seed=0)
    th = thermal_relax(ring, params)
    wp = wavepacket_run(ring, 8.0 / n, n / 16, 4.0 * n)
    pairs.append((n, th.arrival_time))
    print(f"n={n:3d}  thermal arrival {th.arrival_time:7.3f} +- {th.arrival_stderr:.3f}  "
          f"wavepacket arrival {wp.arrival_time:7.3f}")
print(f"thermal arrival ~ n^{scaling_fit(pairs, min_pairs=3).exponent:.3f}")

# %%
# hopping disorder on the clock: mass past the ring midpoint at t = n
n = 32
ring = x_chain(n)
HF = build_feynman(ring)
psi0 = gaussian_packet(ring, 1.0, n / 16)
for eps in (0.0, 0.3, 0.6, 1.0):
    mass = [clock_mass(evolve_constant(add_hopping_disorder(HF, ring, eps, s), psi0, [0.0, n])[-1], ring,
                       range(n // 2, n)) for s in range(20)]
    print(f"eps={eps:.1f}  transmitted mass {np.mean(mass):.3f} +- {np.std(mass) / np.sqrt(len(mass)):.3f}")
