"""Sampling (R)ESPOVM outcomes on every state backend.

A measurement draws ``A'`` uniformly, then an outcome ``p`` with probability
``|<phi_{A'.shifted(p)}|psi>|^2``, and reports ``A = A'.shifted(p)``.  The
backends differ only in how ``p`` is drawn:

* dense states run a Walsh-Hadamard transform over all ``2^n`` outcomes;
* sparse states use the chain-rule parity sampler;
* graph states fold the CZ layer into the graph and measure a tableau;
* general tableaus simulate the measurement circuit.

Noise enters through :func:`sample_noisy_pair`: Pauli preparation errors
modify each copy of the state, and gate errors on the measurement circuit are
pushed to the end of the circuit as an outcome flip string.
"""

from __future__ import annotations

import math

import numpy as np

from ..eqcore import (
    EquatorialLabel,
    _I_POWERS,
    basis_bits,
    num_pairs,
    phase_exponents,
    sample_label_arrays,
    sample_label_uniform,
)
from ..qsim import (
    DenseState,
    GraphState,
    NoiseModel,
    SparseState,
    StabilizerTableau,
    apply_clifford_tableau,
    measure_tableau_z,
    measurement_flip_string,
    sample_measurement_flips,
    sample_pauli_errors,
    sample_prep_errors,
)
from ..qsim.dense import apply_gates_vector, pauli_string_gates
from ..qsim.sparse import parity_pair_tables, sample_parity_outcome
from ..synth import espovm_measurement_circuit

_SCHEME_ALIASES = {"eq": "eq", "espovm": "eq", "req": "req", "respovm": "req"}


def label_scheme(scheme: str) -> str:
    """Map ``espovm``/``respovm`` (or ``eq``/``req``) to the label scheme."""
    try:
        return _SCHEME_ALIASES[scheme]
    except KeyError:
        raise ValueError(f"unknown measurement scheme {scheme!r}") from None


def walsh_hadamard(vecs: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform along the last axis."""
    vecs = np.asarray(vecs)
    lead = vecs.shape[:-1]
    dim = vecs.shape[-1]
    n = dim.bit_length() - 1
    out = vecs.reshape(lead + (2,) * n).astype(complex)
    base = len(lead)
    for ax in range(base, base + n):
        a = np.take(out, 0, axis=ax)
        b = np.take(out, 1, axis=ax)
        out = np.stack([a + b, a - b], axis=ax)
    return out.reshape(lead + (dim,))


def _bits_of(idx: np.ndarray, n: int) -> np.ndarray:
    return ((np.asarray(idx)[..., None] >> np.arange(n - 1, -1, -1)) & 1).astype(np.uint8)


def _shift(scheme: str, diag: np.ndarray, p: np.ndarray) -> np.ndarray:
    step, mod = (2, 4) if scheme == "eq" else (1, 2)
    return (np.asarray(diag, dtype=np.int64) + step * p) % mod


def dense_outcome_probabilities(vector: np.ndarray, scheme: str, diag: np.ndarray, offdiag: np.ndarray) -> np.ndarray:
    """``(B, 2^n)`` outcome laws ``prob(p | A'_b)`` for a batch of labels."""
    vector = np.asarray(vector, dtype=complex)
    n = vector.shape[0].bit_length() - 1
    q = phase_exponents(scheme, diag, offdiag, basis_bits(n))
    amps = walsh_hadamard(_I_POWERS[q].conj() * vector[None, :]) / math.sqrt(2**n)
    return np.abs(amps) ** 2


def _draw_rows(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    cum = np.cumsum(probs, axis=1)
    u = rng.random(probs.shape[0]) * cum[:, -1]
    idx = (cum <= u[:, None]).sum(axis=1)
    return np.minimum(idx, probs.shape[1] - 1)


def _sample_dense_batch(state: DenseState, scheme: str, size: int, rng: np.random.Generator):
    n = state.n
    diag, off = sample_label_arrays(scheme, n, size, rng)
    probs = dense_outcome_probabilities(state.vector, scheme, diag, off)
    p = _bits_of(_draw_rows(probs, rng), n)
    return _shift(scheme, diag, p), off.astype(np.uint8), p


def _sparse_outcome(state: SparseState, A: EquatorialLabel, rng, tables=None) -> np.ndarray:
    q = phase_exponents(A.scheme, A.diag[None], A.offdiag[None], state.bits)[0]
    beta = state.coeffs * _I_POWERS[q].conj()
    return sample_parity_outcome(beta, state.bits, rng, tables)


def _graph_outcome(state: GraphState, A: EquatorialLabel, rng) -> np.ndarray:
    n = state.n
    gamma = (state.gamma.astype(np.int64) + A.adjacency()) % 2
    tab = StabilizerTableau.graph_state(gamma, state.b)
    u = (-A.as_eq().diag.astype(np.int64)) % 4
    for v in range(n):
        if u[v] == 1:
            tab._s(v)
        elif u[v] == 2:
            tab._pauli("Z", v)
        elif u[v] == 3:
            tab._sdg(v)
        tab._h(v)
    return measure_tableau_z(tab, rng)[0]


def _tableau_outcome(state: StabilizerTableau, A: EquatorialLabel, rng) -> np.ndarray:
    circuit = espovm_measurement_circuit(A)
    return measure_tableau_z(apply_clifford_tableau(circuit, state), rng)[0]


def ideal_outcome(state, A_prime: EquatorialLabel, rng: np.random.Generator, tables=None) -> np.ndarray:
    """Outcome ``p`` of measuring ``state`` with the circuit of ``A_prime``."""
    if isinstance(state, DenseState):
        probs = dense_outcome_probabilities(state.vector, A_prime.scheme, A_prime.diag[None], A_prime.offdiag[None])
        return _bits_of(_draw_rows(probs, rng), state.n)[0]
    if isinstance(state, SparseState):
        return _sparse_outcome(state, A_prime, rng, tables)
    if isinstance(state, GraphState):
        return _graph_outcome(state, A_prime, rng)
    if isinstance(state, StabilizerTableau):
        return _tableau_outcome(state, A_prime, rng)
    raise TypeError(f"unsupported state type {type(state).__name__}")


def _check_state(state) -> None:
    if isinstance(state, np.ndarray):
        raise TypeError("wrap raw vectors in DenseState before sampling")


def sample_espovm_outcome(
    state, scheme: str, rng: int | np.random.Generator | None = None
) -> tuple[EquatorialLabel, np.ndarray]:
    """Draw one (R)ESPOVM outcome.

    Args:
        state: :class:`DenseState`, :class:`SparseState`, :class:`GraphState`
            or :class:`StabilizerTableau`.
        scheme: ``eq``/``espovm`` or ``req``/``respovm``.
        rng: Seed or generator.

    Returns:
        The post-update label ``A`` (outcome folded into the diagonal) and the
        raw outcome bits ``p``.
    """
    _check_state(state)
    scheme = label_scheme(scheme)
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    A_prime = sample_label_uniform(scheme, state.n, rng)
    p = ideal_outcome(state, A_prime, rng)
    return A_prime.shifted(p), p


def sample_espovm_batch(
    state, scheme: str, size: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Draw ``size`` outcomes as arrays ``(diag, offdiag, p)`` of post-update labels."""
    _check_state(state)
    scheme = label_scheme(scheme)
    if isinstance(state, DenseState):
        return _sample_dense_batch(state, scheme, size, rng)
    n = state.n
    diag = np.zeros((size, n), dtype=np.int64)
    off = np.zeros((size, num_pairs(n)), dtype=np.uint8)
    ps = np.zeros((size, n), dtype=np.uint8)
    tables = parity_pair_tables(state.bits) if isinstance(state, SparseState) else None
    for k in range(size):
        A_prime = sample_label_uniform(scheme, n, rng)
        p = ideal_outcome(state, A_prime, rng, tables)
        diag[k] = _shift(scheme, A_prime.diag, p)
        off[k] = A_prime.offdiag
        ps[k] = p
    return diag, off, ps


def sample_computational_batch(state, size: int, rng: np.random.Generator) -> np.ndarray:
    """``size`` independent Z-basis outcomes."""
    _check_state(state)
    n = state.n
    if isinstance(state, DenseState):
        probs = np.broadcast_to(state.probabilities(), (size, 1 << n))
        return _bits_of(_draw_rows(probs, rng), n)
    if isinstance(state, SparseState):
        w = np.abs(state.coeffs) ** 2
        picks = _draw_rows(np.broadcast_to(w, (size, w.shape[0])), rng)
        return state.bits[picks].copy()
    if isinstance(state, GraphState):
        return (rng.random((size, n)) < 0.5).astype(np.uint8)
    if isinstance(state, StabilizerTableau):
        return np.array([measure_tableau_z(state, rng)[0] for _ in range(size)], dtype=np.uint8)
    raise TypeError(f"unsupported state type {type(state).__name__}")


# -- noise ---------------------------------------------------------------------


def apply_pauli_string(state, paulis):
    """Return the state after a Pauli string (global phase ignored)."""
    if all(p == "I" for p in paulis):
        return state
    if isinstance(state, DenseState):
        return DenseState(apply_gates_vector(state.vector, state.n, pauli_string_gates(paulis)))
    if isinstance(state, SparseState):
        x = np.array([p in "XY" for p in paulis], dtype=np.uint8)
        z = np.array([p in "ZY" for p in paulis], dtype=np.uint8)
        return state.apply_pauli(x, z)
    if isinstance(state, GraphState):
        return state.apply_paulis(paulis)
    if isinstance(state, StabilizerTableau):
        out = state.copy()
        for q, p in enumerate(paulis):
            if p != "I":
                out._pauli(p, q)
        return out
    raise TypeError(f"unsupported state type {type(state).__name__}")


def noisy_copy(state, noise: NoiseModel | None, rng: np.random.Generator):
    """One copy of ``state`` after i.i.d. preparation errors."""
    if noise is None or np.all(noise.prep_rows(state.n)[:, 0] == 1.0):
        return state
    return apply_pauli_string(state, sample_prep_errors(noise, state.n, rng))


def _has_gate_noise(noise: NoiseModel | None) -> bool:
    return noise is not None and any(ch.rate > 0 for ch in noise.gate.values())


def _has_meas_noise(noise: NoiseModel | None) -> bool:
    return noise is not None and (noise.meas_flip > 0 or noise.meas_injector is not None)


def sample_noisy_pair(
    state,
    scheme: str,
    rng: np.random.Generator,
    noise: NoiseModel | None = None,
    lnn: bool = False,
    tables=None,
    with_basis: bool = True,
) -> tuple[EquatorialLabel, np.ndarray]:
    """One (R)ESPOVM outcome and one Z-basis outcome on two noisy copies.

    Args:
        state: Ideal input state.
        scheme: Measurement scheme.
        rng: Generator; draws happen in a fixed order.
        noise: Preparation, gate and measurement noise, or ``None``.
        lnn: Compile the measurement circuit for a line of qubits (affects
            only which gates carry noise).
        tables: Optional parity tables for a sparse state.
        with_basis: When false the second copy is not measured and ``p'`` is
            all zeros (for observables with a constant Z-basis term).

    Returns:
        The post-update label built from the noisy outcome, and ``p'``.
    """
    scheme = label_scheme(scheme)
    n = state.n
    first = noisy_copy(state, noise, rng)
    A_prime = sample_label_uniform(scheme, n, rng)
    p = ideal_outcome(first, A_prime, rng, tables)
    if _has_gate_noise(noise):
        circuit = espovm_measurement_circuit(A_prime, lnn=lnn)
        p = p ^ measurement_flip_string(circuit, sample_pauli_errors(noise, circuit, rng))
    if _has_meas_noise(noise):
        p = p ^ sample_measurement_flips(noise, n, rng)
    if not with_basis:
        return A_prime.shifted(p), np.zeros(n, dtype=np.uint8)
    second = noisy_copy(state, noise, rng)
    p_prime = sample_computational_batch(second, 1, rng)[0]
    if _has_meas_noise(noise):
        p_prime = p_prime ^ sample_measurement_flips(noise, n, rng)
    return A_prime.shifted(p), p_prime
