"""Equatorial-stabilizer shadow tomography: sampling, estimators and aggregation."""

from __future__ import annotations

from ..qsim.noise import gadgetize
from .clifford import (
    clifford_baseline_draw,
    clifford_baseline_sample,
    clifford_estimate,
    clifford_tableau_of_circuit,
    random_clifford_circuit,
    random_clifford_tableau,
    random_symplectic,
    synthesize_clifford,
)
from .estimators import (
    bitflip_tolerance,
    copy_bound,
    estimator_batch,
    estimator_single,
    exact_estimator_mean,
    exact_estimator_moments,
    exact_label_law,
    exact_label_second_moment,
    ghz_estimator,
    ghz_estimator_split,
    graph_estimator,
    variance_bound,
    w_estimator,
    w_estimator_split,
)
from .observables import DenseObservable, Observable, ProjectorObservable, as_observable
from .protocol import EstimateReport, EstimationConfig, median_of_means, run_protocol
from .sampling import (
    apply_pauli_string,
    label_scheme,
    noisy_copy,
    sample_computational_batch,
    sample_espovm_batch,
    sample_espovm_outcome,
    sample_noisy_pair,
)

__all__ = [
    "DenseObservable",
    "EstimateReport",
    "EstimationConfig",
    "Observable",
    "ProjectorObservable",
    "apply_pauli_string",
    "as_observable",
    "bitflip_tolerance",
    "clifford_baseline_draw",
    "clifford_baseline_sample",
    "clifford_estimate",
    "clifford_tableau_of_circuit",
    "copy_bound",
    "estimator_batch",
    "estimator_single",
    "exact_estimator_mean",
    "exact_estimator_moments",
    "exact_label_law",
    "exact_label_second_moment",
    "gadgetize",
    "ghz_estimator",
    "ghz_estimator_split",
    "graph_estimator",
    "label_scheme",
    "median_of_means",
    "noisy_copy",
    "random_clifford_circuit",
    "random_clifford_tableau",
    "random_symplectic",
    "run_protocol",
    "sample_computational_batch",
    "sample_espovm_batch",
    "sample_espovm_outcome",
    "sample_noisy_pair",
    "synthesize_clifford",
    "variance_bound",
    "w_estimator",
    "w_estimator_split",
]
