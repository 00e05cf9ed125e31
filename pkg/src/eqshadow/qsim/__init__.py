"""Simulation backends: dense statevectors, sparse states, stabilizer tableaus and noise."""

from __future__ import annotations

import numpy as np

from .circuit import Circuit, Gate, gate, layered, parse_circuit
from .graph import GraphState
from .dense import (
    DenseState,
    apply_circuit,
    circuit_unitary,
    dense_cap,
    outcome_distribution,
    random_state,
    sample_dense_z,
)
from .noise import (
    NoiseModel,
    PauliChannel,
    bitflip_inject,
    density_oracle,
    depolarizing_prep,
    gadgetize,
    gate_class,
    insert_errors,
    measurement_flip_string,
    noisy_density_matrix,
    sample_measurement_flips,
    sample_pauli_errors,
    sample_prep_errors,
    x_prep,
    z_prep,
)
from .sparse import SparseState, ghz_state, sample_parity_outcome, sample_sparse_z, w_state
from .tableau import (
    StabilizerTableau,
    apply_clifford_tableau,
    measure_tableau_z,
    stabilizer_overlap_sq,
)


def measure_z_all(state, rng: np.random.Generator) -> np.ndarray:
    """Sample a computational-basis outcome from any backend.

    Tableau states are measured on a copy; the input is left untouched.
    """
    if isinstance(state, DenseState):
        return sample_dense_z(state, rng)
    if isinstance(state, SparseState):
        return sample_sparse_z(state, rng)
    if isinstance(state, StabilizerTableau):
        return measure_tableau_z(state, rng)[0]
    if isinstance(state, GraphState):
        return (rng.random(state.n) < 0.5).astype(np.uint8)
    raise TypeError(f"unsupported state type {type(state).__name__}")


__all__ = [
    "Circuit",
    "DenseState",
    "Gate",
    "GraphState",
    "NoiseModel",
    "PauliChannel",
    "SparseState",
    "StabilizerTableau",
    "apply_circuit",
    "apply_clifford_tableau",
    "bitflip_inject",
    "circuit_unitary",
    "dense_cap",
    "density_oracle",
    "depolarizing_prep",
    "gadgetize",
    "gate",
    "gate_class",
    "ghz_state",
    "insert_errors",
    "layered",
    "measurement_flip_string",
    "measure_tableau_z",
    "measure_z_all",
    "noisy_density_matrix",
    "outcome_distribution",
    "parse_circuit",
    "random_state",
    "sample_measurement_flips",
    "sample_parity_outcome",
    "sample_pauli_errors",
    "sample_prep_errors",
    "stabilizer_overlap_sq",
    "w_state",
    "x_prep",
    "z_prep",
]
