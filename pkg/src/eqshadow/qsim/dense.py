"""Dense statevector and density-matrix simulation."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .circuit import Circuit, Gate

DEFAULT_DENSE_CAP = 12

_SQ = 1 / math.sqrt(2)
ONE_QUBIT = {
    "I": np.eye(2, dtype=complex),
    "H": np.array([[_SQ, _SQ], [_SQ, -_SQ]], dtype=complex),
    "S": np.diag([1, 1j]),
    "SDG": np.diag([1, -1j]),
    "Z": np.diag([1, -1]).astype(complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
}
TWO_QUBIT = {
    "CZ": np.diag([1, 1, 1, -1]).astype(complex).reshape(2, 2, 2, 2),
    "CNOT": np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    ).reshape(2, 2, 2, 2),
}


def dense_cap() -> int:
    """Largest qubit count for dense vectors (``EQSHADOW_DENSE_CAP`` overrides)."""
    return int(os.environ.get("EQSHADOW_DENSE_CAP", DEFAULT_DENSE_CAP))


@dataclass(frozen=True)
class DenseState:
    """Pure state stored as ``2^n`` amplitudes (qubit 0 most significant)."""

    vector: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        vec = np.array(self.vector, dtype=complex).reshape(-1)
        n = int(round(math.log2(vec.shape[0]))) if vec.shape[0] else -1
        if n < 1 or 1 << n != vec.shape[0]:
            raise ValueError("dense state length must be a power of two")
        if n > dense_cap():
            raise ValueError(f"{n} qubits exceed the dense cap {dense_cap()}")
        norm = np.linalg.norm(vec)
        if abs(norm - 1) > 1e-10:
            raise ValueError(f"state is not normalised (norm {norm})")
        vec.flags.writeable = False
        object.__setattr__(self, "vector", vec)

    @property
    def n(self) -> int:
        return self.vector.shape[0].bit_length() - 1

    @classmethod
    def zero(cls, n: int) -> DenseState:
        vec = np.zeros(1 << n, dtype=complex)
        vec[0] = 1
        return cls(vec)

    @classmethod
    def basis(cls, bits) -> DenseState:
        bits = [int(b) for b in bits]
        vec = np.zeros(1 << len(bits), dtype=complex)
        vec[int("".join(map(str, bits)), 2)] = 1
        return cls(vec)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.vector) ** 2

    def density_matrix(self) -> np.ndarray:
        return np.outer(self.vector, self.vector.conj())


def random_state(n: int, seed: int | np.random.Generator | None = None, real: bool = False) -> DenseState:
    """Haar-random pure state (or uniformly random real unit vector)."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    vec = rng.normal(size=1 << n).astype(complex)
    if not real:
        vec = vec + 1j * rng.normal(size=1 << n)
    return DenseState(vec / np.linalg.norm(vec))


def apply_gate_tensor(tensor: np.ndarray, g: Gate, offset: int = 0, conj: bool = False) -> np.ndarray:
    """Apply a gate to a ``(2,)*k`` tensor along axes ``offset + qubit``."""
    if g.name in ONE_QUBIT:
        mat = ONE_QUBIT[g.name]
        if conj:
            mat = mat.conj()
        ax = offset + g.qubits[0]
        out = np.tensordot(mat, tensor, axes=([1], [ax]))
        return np.moveaxis(out, 0, ax)
    mat = TWO_QUBIT[g.name]
    a, b = offset + g.qubits[0], offset + g.qubits[1]
    out = np.tensordot(mat, tensor, axes=([2, 3], [a, b]))
    return np.moveaxis(out, [0, 1], [a, b])


def apply_gates_vector(vec: np.ndarray, n: int, gates) -> np.ndarray:
    tensor = np.asarray(vec, dtype=complex).reshape((2,) * n)
    for g in gates:
        tensor = apply_gate_tensor(tensor, g)
    return tensor.reshape(-1)


def apply_circuit(circuit: Circuit, state: DenseState) -> DenseState:
    """Apply the unitary part of ``circuit`` layer by layer."""
    if circuit.n != state.n:
        raise ValueError("circuit and state qubit counts differ")
    gates = (g for layer in circuit.layers for g in layer)
    return DenseState(apply_gates_vector(state.vector, state.n, gates))


def circuit_unitary(circuit: Circuit) -> np.ndarray:
    """Full ``2^n x 2^n`` unitary of the circuit's gate layers."""
    n = circuit.n
    basis = np.eye(1 << n, dtype=complex).reshape((1 << n,) + (2,) * n)
    tensor = np.moveaxis(basis, 0, -1)
    for layer in circuit.layers:
        for g in layer:
            tensor = apply_gate_tensor(tensor, g)
    return tensor.reshape(1 << n, 1 << n)


_BASIS_CHANGE = {"X": ("H",), "Y": ("SDG", "H"), "Z": (), "N": ()}


def measurement_rotation(circuit: Circuit) -> list[Gate]:
    if circuit.measure is None:
        return []
    out = []
    for q, b in enumerate(circuit.measure):
        out.extend(Gate(name, (q,)) for name in _BASIS_CHANGE[b])
    return out


def outcome_distribution(circuit: Circuit, state: DenseState) -> np.ndarray:
    """Exact outcome probabilities of the circuit's terminal measurement.

    Outcomes are indexed as big-endian bit strings over all ``n`` qubits;
    unmeasured (``N``) qubits are summed out and reported as 0.  Outcome
    flips are applied per qubit; then, when ``reverse_outcome`` is set, bit
    ``i`` of the reported outcome is the result on qubit ``n-1-i``.
    """
    if circuit.measure is None:
        raise ValueError("circuit has no terminal measurement")
    n = circuit.n
    vec = apply_circuit(circuit, state).vector
    vec = apply_gates_vector(vec, n, measurement_rotation(circuit))
    probs = (np.abs(vec) ** 2).reshape((2,) * n)
    for q, b in enumerate(circuit.measure):
        if b == "N":
            total = probs.sum(axis=q, keepdims=True)
            probs = np.concatenate([total, np.zeros_like(total)], axis=q)
    if circuit.outcome_flip is not None:
        for q, b in enumerate(circuit.outcome_flip):
            if b:
                probs = np.flip(probs, axis=q)
    if circuit.reverse_outcome:
        probs = probs.transpose(tuple(range(n - 1, -1, -1)))
    return probs.reshape(-1)


def sample_dense_z(state: DenseState, rng: np.random.Generator) -> np.ndarray:
    probs = state.probabilities()
    idx = int(np.searchsorted(np.cumsum(probs), rng.random() * probs.sum(), side="right"))
    idx = min(idx, probs.shape[0] - 1)
    return ((idx >> np.arange(state.n - 1, -1, -1)) & 1).astype(np.uint8)


def pauli_string_gates(paulis) -> list[Gate]:
    """Gates for a Pauli string given as a sequence of I/X/Y/Z per qubit."""
    return [Gate(p, (q,)) for q, p in enumerate(paulis) if p != "I"]


# Density-matrix helpers -------------------------------------------------------


def apply_gate_density(rho: np.ndarray, n: int, g: Gate) -> np.ndarray:
    tensor = rho.reshape((2,) * (2 * n))
    tensor = apply_gate_tensor(tensor, g)
    tensor = apply_gate_tensor(tensor, g, offset=n, conj=True)
    return tensor.reshape(1 << n, 1 << n)


def pauli_twirl_density(rho: np.ndarray, n: int, qubit: int, weights: dict[str, float]) -> np.ndarray:
    """``sum_P w_P P rho P`` on one qubit."""
    out = np.zeros_like(rho)
    for p, w in weights.items():
        if w == 0:
            continue
        out += w * (rho if p == "I" else apply_gate_density(rho, n, Gate(p, (qubit,))))
    return out
