"""Hamiltonian ground-state benchmarks."""

from .experiment import BenchmarkResult, ExperimentConfig, run_experiment
from .targets import ground_state, target_mps
from .hamiltonians import FAMILIES, HamiltonianSpec, build_hamiltonian, pauli_terms, snake_inverse, snake_order

__all__ = [
    "FAMILIES",
    "BenchmarkResult",
    "ExperimentConfig",
    "HamiltonianSpec",
    "build_hamiltonian",
    "ground_state",
    "pauli_terms",
    "run_experiment",
    "snake_inverse",
    "snake_order",
    "target_mps",
]
