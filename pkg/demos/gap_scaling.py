"""
Gap scaling of the ring clock
=============================

The interpolated Hamiltonian eta*H0 + (1-lam)*H1 + lam*H_F is block diagonal
in the history frame, one n x n clock block per input b. This walks through
the gap profile of the Bell ring and how its minimum shrinks with n.
"""
# %%
import numpy as np

from clockwork import bundled_circuit, gap_scan, pad_ring, scaling_fit
from clockwork.hamiltonian import build_chain

ring = pad_ring(bundled_circuit("bell"))
print(f"m={ring.m} g={ring.g} n={ring.n} dim={ring.dim}")

# %%
# gap profile on a 21-point grid; gap_sector is the penalty gap to b != 0
profile = gap_scan(ring, eta=4.0, lambda_grid=np.linspace(0, 1, 21))
print(profile.to_csv())
print("minimum gap", profile.min_gap, "at lambda", profile.argmin_lambda)

# %%
# the b = 0 clock block at lambda = 1 is a plain ring: gap 2 - 2 cos(2 pi / n)
rows = []
for n in (8, 16, 32, 64):
    vals = np.linalg.eigvalsh(build_chain(n, 1.0).toarray())
    prof = gap_scan(pad_ring(bundled_circuit("bell"), n=n), 4.0, np.linspace(0, 1, 21))
    rows.append((n, vals[1] - vals[0], prof.min_gap, prof.argmin_lambda))
    print(f"n={n:3d}  chain gap {rows[-1][1]:.5f}  min gap_total {prof.min_gap:.5f}  at lambda {prof.argmin_lambda:.2f}")

fit = scaling_fit([(n, g) for n, g, _, _ in rows])
print(f"chain gap ~ n^{fit.exponent:.3f}")
fit = scaling_fit([(n, g) for n, _, g, _ in rows])
print(f"minimum total gap ~ n^{fit.exponent:.3f}")

# %%
# the sector gap at lambda = 1 depends on how eta compares with the clock bandwidth;
# weak penalties give the first-order value eta/n, strong ones saturate at 1/n^2
for eta in (1e-4, 0.1, 4.0, 100.0):
    pairs = []
    for n in (8, 16, 32, 64):
        prof = gap_scan(pad_ring(bundled_circuit("bell"), n=n), eta, [0.0, 0.5, 1.0])
        pairs.append((n, prof.points[-1].gap_sector))
    print(f"eta={eta:<7g} sector gap ~ n^{scaling_fit(pairs).exponent:.2f}")
