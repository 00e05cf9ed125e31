"""Randomized-Clifford shadow baseline.

Uniform Clifford unitaries are drawn as a uniformly random symplectic matrix
(built from symplectic transvections, one random nonzero vector and one
random bit string per recursion level) together with uniformly random signs.
A drawn tableau is compiled into ``H``/``S``/``CNOT``/Pauli gates by
row-by-row Gaussian elimination so that gate noise can be attached to it.
"""

from __future__ import annotations

import numpy as np

from ..qsim import (
    Circuit,
    DenseState,
    Gate,
    NoiseModel,
    StabilizerTableau,
    apply_circuit,
    measure_tableau_z,
    measurement_flip_string,
    sample_pauli_errors,
    stabilizer_overlap_sq,
)
from ..qsim.dense import sample_dense_z
from .observables import Observable, ProjectorObservable, as_observable


def _as_rng(seed: int | np.random.Generator | None) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


# -- symplectic sampling ------------------------------------------------------


def _inner(v: np.ndarray, w: np.ndarray) -> int:
    """Symplectic form on interleaved vectors ``(x1, z1, x2, z2, ...)``."""
    return int((v[0::2] @ w[1::2] + v[1::2] @ w[0::2]) % 2)


def _transvect(k: np.ndarray, v: np.ndarray) -> np.ndarray:
    return (v + _inner(k, v) * k) % 2


def _find_transvection(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectors ``h1, h2`` whose transvections map ``x`` to ``y`` (both nonzero)."""
    m = x.shape[0]
    h1 = np.zeros(m, dtype=np.int64)
    h2 = np.zeros(m, dtype=np.int64)
    if np.array_equal(x, y):
        return h1, h2
    if _inner(x, y) == 1:
        return (x + y) % 2, h2
    z = np.zeros(m, dtype=np.int64)
    for i in range(0, m, 2):
        if (x[i] or x[i + 1]) and (y[i] or y[i + 1]):
            z[i] = (x[i] + y[i]) % 2
            z[i + 1] = (x[i + 1] + y[i + 1]) % 2
            if z[i] + z[i + 1] == 0:
                z[i + 1] = 1
                if x[i] != x[i + 1]:
                    z[i] = 1
            return (x + z) % 2, (y + z) % 2
    for i in range(0, m, 2):
        if (x[i] or x[i + 1]) and not (y[i] or y[i + 1]):
            if x[i] == x[i + 1]:
                z[i + 1] = 1
            else:
                z[i + 1] = x[i]
                z[i] = x[i + 1]
            break
    for i in range(0, m, 2):
        if not (x[i] or x[i + 1]) and (y[i] or y[i + 1]):
            if y[i] == y[i + 1]:
                z[i + 1] = 1
            else:
                z[i + 1] = y[i]
                z[i] = y[i + 1]
            break
    return (x + z) % 2, (y + z) % 2


def random_symplectic(n: int, seed: int | np.random.Generator | None = None) -> np.ndarray:
    """Uniformly random ``2n x 2n`` symplectic matrix over GF(2).

    Rows ``2k`` and ``2k+1`` are the images of ``X_k`` and ``Z_k`` in the
    interleaved basis.  Each level picks the image of the first basis vector
    uniformly among nonzero vectors, then the image of its partner uniformly
    among the vectors pairing to it, and recurses on the complement.
    """
    rng = _as_rng(seed)
    m = 2 * n
    while True:
        f1 = rng.integers(0, 2, size=m)
        if f1.any():
            break
    bits = rng.integers(0, 2, size=m - 1)
    e1 = np.zeros(m, dtype=np.int64)
    e1[0] = 1
    t1, t2 = _find_transvection(e1, f1)
    eprime = e1.copy()
    eprime[2:] = bits[1:]
    h0 = _transvect(t2, _transvect(t1, eprime))
    if bits[0]:
        f1 = np.zeros(m, dtype=np.int64)
    g = np.zeros((m, m), dtype=np.int64)
    g[0, 0] = g[1, 1] = 1
    if n > 1:
        g[2:, 2:] = random_symplectic(n - 1, rng)
    for j in range(m):
        row = _transvect(t1, g[j])
        row = _transvect(t2, row)
        row = _transvect(h0, row)
        g[j] = _transvect(f1, row)
    return g


def random_clifford_tableau(n: int, seed: int | np.random.Generator | None = None) -> StabilizerTableau:
    """Uniformly random Clifford (modulo global phase) as a tableau.

    Destabilizer row ``k`` is ``U X_k U^dagger`` and stabilizer row ``k`` is
    ``U Z_k U^dagger``; applying the tableau's circuit to ``|0^n>`` prepares
    the state whose stabilizers are the lower half.
    """
    rng = _as_rng(seed)
    g = random_symplectic(n, rng)
    x = np.zeros((2 * n, n), dtype=np.uint8)
    z = np.zeros((2 * n, n), dtype=np.uint8)
    x[:n] = g[0::2, 0::2]
    z[:n] = g[0::2, 1::2]
    x[n:] = g[1::2, 0::2]
    z[n:] = g[1::2, 1::2]
    r = rng.integers(0, 2, size=2 * n).astype(np.uint8)
    return StabilizerTableau(x, z, r)


def clifford_tableau_of_circuit(circuit: Circuit) -> StabilizerTableau:
    """Tableau of the unitary part of ``circuit`` (rows are conjugated ``X_k``, ``Z_k``)."""
    tab = StabilizerTableau.zero_state(circuit.n)
    for _, _, g in circuit.gates():
        tab._apply(g)
    return tab


# -- synthesis ---------------------------------------------------------------


def synthesize_clifford(tab: StabilizerTableau) -> Circuit:
    """Gate sequence realizing a Clifford tableau, one gate per layer.

    Gates are appended to a working copy until it becomes the identity
    tableau; the circuit is the inverse of the appended sequence.  Qubit
    ``i`` is cleaned in turn: its destabilizer is brought to ``X_i``, then
    its stabilizer to ``Z_i``, and the remaining signs are fixed by Paulis.
    """
    n = tab.n
    work = tab.copy()
    seq: list[Gate] = []

    def add(name: str, *qubits: int) -> None:
        g = Gate(name, tuple(qubits))
        work._apply(g)
        seq.append(g)

    def swap(a: int, b: int) -> None:
        add("CNOT", a, b)
        add("CNOT", b, a)
        add("CNOT", a, b)

    for i in range(n):
        # Make destabilizer i have an X on qubit i.
        if not work.x[i, i]:
            hit = [j for j in range(i, n) if work.x[i, j]]
            if hit:
                swap(hit[0], i)
            else:
                j = next(j for j in range(i, n) if work.z[i, j])
                add("H", j)
                if j != i:
                    swap(j, i)
        # Clear the rest of destabilizer i.
        for j in range(i + 1, n):
            if work.x[i, j]:
                add("CNOT", i, j)
        if work.z[i, i:].any():
            if not work.z[i, i]:
                add("S", i)
            for j in range(i + 1, n):
                if work.z[i, j]:
                    add("CNOT", j, i)
            add("S", i)
        # Clear stabilizer i down to Z_i.
        s = n + i
        for j in range(i + 1, n):
            if work.z[s, j]:
                add("CNOT", j, i)
        if work.x[s, i:].any():
            add("H", i)
            for j in range(i + 1, n):
                if work.x[s, j]:
                    add("CNOT", i, j)
            if work.z[s, i]:
                add("S", i)
            add("H", i)
    for i in range(n):
        if work.r[i]:
            add("Z", i)
        if work.r[n + i]:
            add("X", i)
    inverse = [g.inverse() for g in reversed(seq)]
    return Circuit(n, tuple((g,) for g in inverse))


def random_clifford_circuit(n: int, seed: int | np.random.Generator | None = None) -> Circuit:
    return synthesize_clifford(random_clifford_tableau(n, seed))


# -- estimator ---------------------------------------------------------------


def _rotated_expectation(U: Circuit, O: Observable, p: np.ndarray) -> float:
    """``<p|U O U^dagger|p>``."""
    n = U.n
    if isinstance(O, ProjectorObservable) and not isinstance(O.target, DenseState) and n > 12:
        # Stabilizer targets at scale: |<p|U|t>|^2 by tableau overlap.
        if not hasattr(O.target, "to_tableau"):
            raise ValueError("large-n Clifford baseline needs a stabilizer target")
        rotated = O.target.to_tableau()
        for _, _, g in U.gates():
            rotated._apply(g)
        basis = StabilizerTableau.zero_state(n)
        for q in np.flatnonzero(p):
            basis._apply(Gate("X", (int(q),)))
        return stabilizer_overlap_sq(rotated, basis)
    vec = np.zeros(1 << n, dtype=complex)
    vec[int(np.asarray(p, dtype=np.int64) @ (1 << np.arange(n - 1, -1, -1)))] = 1
    back = apply_circuit(U.inverse(), DenseState(vec)).vector
    return float(np.real(np.vdot(back, O.matrix() @ back)))


def clifford_baseline_draw(
    state,
    rng: np.random.Generator,
    noise: NoiseModel | None = None,
) -> tuple[Circuit, np.ndarray]:
    """Draw a uniform Clifford circuit ``U`` and a Z outcome of ``U state``.

    Gate noise is attached to every gate of the compiled circuit according to
    its class; its effect is applied as the propagated outcome flip string.
    """
    if isinstance(state, StabilizerTableau):
        n = state.n
    else:
        if not isinstance(state, DenseState):
            state = DenseState(state.to_dense() if hasattr(state, "to_dense") else np.asarray(state))
        n = state.n
    U = random_clifford_circuit(n, rng)
    if isinstance(state, StabilizerTableau):
        tab = state.copy()
        for _, _, g in U.gates():
            tab._apply(g)
        p = measure_tableau_z(tab, rng)[0]
    else:
        p = sample_dense_z(apply_circuit(U, state), rng)
    if noise is not None and not noise.is_noiseless():
        measured = U.with_measurement("Z")
        errors = sample_pauli_errors(noise, measured, rng)
        p = p ^ measurement_flip_string(measured, errors)
        if noise.meas_flip or noise.meas_injector is not None:
            from ..qsim import sample_measurement_flips

            p = p ^ sample_measurement_flips(noise, n, rng)
    return U, p


def clifford_estimate(U: Circuit, p: np.ndarray, O) -> float:
    """``(2^n + 1) <p|U O U^dagger|p> - tr(O)``."""
    O = as_observable(O)
    return (2**U.n + 1) * _rotated_expectation(U, O, p) - O.trace


def clifford_baseline_sample(
    state,
    O,
    rng: int | np.random.Generator | None = None,
    noise: NoiseModel | None = None,
) -> float:
    """One randomized-Clifford shadow estimate of ``tr(rho O)``.

    Args:
        state: :class:`DenseState` (or vector), a state with ``to_dense`` or a
            :class:`StabilizerTableau`.
        O: Observable, matrix or pure target state.
        rng: Seed or generator.
        noise: Optional noise on the compiled Clifford circuit.
    """
    rng = _as_rng(rng)
    U, p = clifford_baseline_draw(state, rng, noise)
    return clifford_estimate(U, p, O)
