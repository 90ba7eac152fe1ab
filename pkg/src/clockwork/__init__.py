"""Feynman clock Hamiltonians for adiabatic quantum computation.

Circuits are compiled into ring-shaped clocked programs whose spectra,
gaps and dynamics (adiabatic, sudden, thermal, coherent) can be computed
and checked against brute-force oracles at desk scale.
"""
from .circuit_ir import (Circuit, CircuitParseError, Gate, RingProgram, apply_circuit, cumulative_unitaries,
                         format_circuit, load_circuit, pad_ring, parse_circuit, repeat_circuit)
from .hamiltonian import (InterpolationPoint, SparseOperator, SpaceDescriptor, add_hopping_disorder, build_chain,
                          build_feynman, build_h0, build_h1, build_tilt, interpolate)
from .spectral import (GapProfile, ScalingFit, SectorReport, Spectrum, eigensystem, gap_scan, momentum_eigenstate,
                       scaling_fit, sector_classify, sector_expectation, sector_spectrum)
from .dynamics import (ReadoutResult, Schedule, ThermalParams, Trajectory, evolve_schedule, measure_answer,
                       quench_dispersion, thermal_relax, wavepacket_run)
from .tagteam import (TagCircuit, build_particle_hamiltonian, equivalence_check, reachable_subspace,
                      tagteam_transform)
from .data import bundled_circuit, bundled_path

__version__ = "0.1.0"
