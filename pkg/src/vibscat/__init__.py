"""Vibrational excitation and dissociation in atom-diatom collisions, computed
with qubit-efficient encoding, Trotterized circuits and Hadamard tests on an
exact statevector simulator."""

from .circuits import Circuit, Gate, build_evolution_circuit, compile_pauli_rotation, trotter_step
from .config import CollisionConfig, ConfigError, load_config, parse_config
from .coupling import CouplingTable, build_coupling_table, coupling_at_time
from .eigensolver import RadialMesh, VibrationalBasis, solve_basis
from .encoding import PauliString, QubitHamiltonian, encode_hamiltonian
from .ode import integrate_schrodinger
from .pipeline import Pipeline, convergence_study
from .potential import JacobiGeometry, SurfaceModel
from .scattering import cross_section_bound, cross_section_dissociation, projectile_velocity
from .simulator import circuit_unitary, run
from .smatrix import SMatrix, assemble_smatrix, hadamard_test, transition_probabilities

__all__ = [
    "Circuit",
    "CollisionConfig",
    "ConfigError",
    "CouplingTable",
    "Gate",
    "JacobiGeometry",
    "PauliString",
    "Pipeline",
    "QubitHamiltonian",
    "RadialMesh",
    "SMatrix",
    "SurfaceModel",
    "VibrationalBasis",
    "assemble_smatrix",
    "build_coupling_table",
    "build_evolution_circuit",
    "circuit_unitary",
    "compile_pauli_rotation",
    "convergence_study",
    "coupling_at_time",
    "cross_section_bound",
    "cross_section_dissociation",
    "encode_hamiltonian",
    "hadamard_test",
    "integrate_schrodinger",
    "load_config",
    "parse_config",
    "projectile_velocity",
    "run",
    "solve_basis",
    "transition_probabilities",
    "trotter_step",
]
