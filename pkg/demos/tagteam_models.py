"""
Tag-team circuits and the particle model
========================================

Inserting trivial coupling gates between consecutive gates forces the
particle model to execute gates in order. Its reachable configurations then
form an open chain whose spectrum matches the pointer model.
"""
# %%
from clockwork import bundled_circuit, build_particle_hamiltonian, equivalence_check, tagteam_transform
from clockwork.tagteam import reachable_subspace

for name in ("bell", "ghz", "phase_kick"):
    base = bundled_circuit(name)
    tag = tagteam_transform(base)
    ph = build_particle_hamiltonian(tag)
    rep = equivalence_check(tag)
    print(f"{name}: g={base.g} -> {len(tag.gates)} gates, coupling pairs {tag.coupling_choices}, "
          f"{len(ph.basis)} configurations, dim {ph.dim}, {rep.line()}")

# %%
# three gates on disjoint wires: untagged, they fire in any order (a cube of
# 2^3 configurations); tagged, the five gates form an open chain of six
from clockwork.circuit_ir import Circuit, Gate

free = Circuit(3, (Gate.named("X", 0), Gate.named("H", 1), Gate.named("S", 2)), (0,))
print("untagged configurations", len(reachable_subspace(free)))
print("tagged configurations  ", len(reachable_subspace(tagteam_transform(free))))
