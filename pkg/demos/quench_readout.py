"""
Reading the answer after a quench
=================================

Switch the Feynman Hamiltonian on suddenly. The clock packet disperses
around the ring and the time-averaged answer probability approaches the
share of clock positions that carry the finished computation.
"""
# %%
import numpy as np

from clockwork import bundled_circuit, pad_ring, quench_dispersion

for name in ("phase_kick", "parity"):
    ring = pad_ring(bundled_circuit(name))
    wait = 5.0 * ring.n ** 2
    res = quench_dispersion(ring, wait, np.linspace(0, wait, 1001))
    print(f"{name}: n={ring.n} time-averaged p_correct {res.p_time_average:.4f}  "
          f"max |weight - 1| {np.max(np.abs(res.weight_series - 1)):.1e}")

# %%
# early times: the packet has not reached the end of the computation yet
ring = pad_ring(bundled_circuit("parity"))
res = quench_dispersion(ring, 3.0 * ring.n, np.linspace(0, 3.0 * ring.n, 13))
for t, p, w in zip(res.times, res.p_series, res.window_series):
    print(f"t={t:6.1f}  p_correct {p:.3f}  idle-window mass {w:.3f}")
