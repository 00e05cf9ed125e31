"""Pauli noise models, error sampling and the exact density-matrix oracle.

Gate noise follows a product-local convention: a channel of rate ``eta``
fires with probability ``eta`` per gate instance, and when it fires every
qubit of the gate receives an independent uniform draw from the channel's
alphabet (``IXYZ`` for depolarizing, ``IZ`` for dephasing).  An all-identity
draw is a legitimate outcome and is not resampled.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .circuit import Circuit, Gate
from .dense import DenseState, apply_gate_density, pauli_twirl_density

DENSITY_CAP = 6

GATE_CLASSES = ("long_range", "nearest", "single")
_ALPHABETS = {"depolarizing": "IXYZ", "dephasing": "IZ"}


@dataclass(frozen=True)
class PauliChannel:
    """Per-gate Pauli error channel.

    Attributes:
        kind: ``"depolarizing"`` or ``"dephasing"``.
        rate: Probability that the channel fires on a gate instance.
        per_qubit: Fire independently on each qubit of the gate instead of
            once per gate.
    """

    kind: str
    rate: float
    per_qubit: bool = False

    def __post_init__(self) -> None:
        if self.kind not in _ALPHABETS:
            raise ValueError(f"unknown channel kind {self.kind!r}")
        if not 0.0 <= self.rate <= 1.0:
            raise ValueError("rate must lie in [0, 1]")

    @property
    def alphabet(self) -> str:
        return _ALPHABETS[self.kind]


def _prep_row(probs) -> tuple[float, float, float, float]:
    row = tuple(float(v) for v in probs)
    if len(row) != 4 or min(row) < 0 or abs(sum(row) - 1) > 1e-12:
        raise ValueError("prep distribution must be four nonnegative numbers summing to 1")
    return row


@dataclass(frozen=True)
class NoiseModel:
    """Noise on state preparation, gates and measurement.

    Attributes:
        prep: Single-qubit ``(pI, pX, pY, pZ)`` applied independently to every
            qubit after preparation, or a per-qubit tuple of such rows.
        gate: Map from gate class (``long_range``, ``nearest``, ``single``) to
            the channel applied after every gate of that class.
        meas_flip: Independent bit-flip probability per measured bit.
        meas_injector: Fixed error string XORed into every outcome.
        periodic: Treat qubits ``0`` and ``n-1`` as neighbours.
    """

    prep: tuple = (1.0, 0.0, 0.0, 0.0)
    gate: Mapping[str, PauliChannel] = field(default_factory=dict)
    meas_flip: float = 0.0
    meas_injector: tuple[int, ...] | None = None
    periodic: bool = False

    def __post_init__(self) -> None:
        prep = self.prep
        if len(prep) and isinstance(prep[0], (tuple, list, np.ndarray)):
            prep = tuple(_prep_row(row) for row in prep)
        else:
            prep = _prep_row(prep)
        object.__setattr__(self, "prep", prep)
        for key in self.gate:
            if key not in GATE_CLASSES:
                raise ValueError(f"unknown gate class {key!r}")
        object.__setattr__(self, "gate", dict(self.gate))
        if not 0.0 <= self.meas_flip <= 1.0:
            raise ValueError("meas_flip must lie in [0, 1]")
        if self.meas_injector is not None:
            object.__setattr__(self, "meas_injector", tuple(int(b) & 1 for b in self.meas_injector))

    def prep_rows(self, n: int) -> np.ndarray:
        if isinstance(self.prep[0], tuple):
            rows = np.array(self.prep)
            if rows.shape[0] != n:
                raise ValueError("per-qubit prep rows do not match n")
            return rows
        return np.tile(np.array(self.prep), (n, 1))

    def is_noiseless(self) -> bool:
        rows = np.atleast_2d(np.array(self.prep))
        clean_prep = bool(np.all(rows[:, 0] == 1.0))
        clean_gates = all(ch.rate == 0 for ch in self.gate.values())
        clean_meas = self.meas_flip == 0 and not any(self.meas_injector or ())
        return clean_prep and clean_gates and clean_meas


def z_prep(eta: float) -> tuple[float, float, float, float]:
    return (1 - eta, 0.0, 0.0, eta)


def x_prep(eta: float) -> tuple[float, float, float, float]:
    return (1 - eta, eta, 0.0, 0.0)


def depolarizing_prep(eta: float) -> tuple[float, float, float, float]:
    """Uniform ``IXYZ`` draw with probability ``eta``, matching the gate convention."""
    return (1 - 0.75 * eta, eta / 4, eta / 4, eta / 4)


def gate_class(g: Gate, n: int, periodic: bool = False) -> str:
    if len(g.qubits) == 1:
        return "single"
    a, b = sorted(g.qubits)
    if b - a == 1 or (periodic and n > 2 and (a, b) == (0, n - 1)):
        return "nearest"
    return "long_range"


def sample_pauli_errors(
    noise: NoiseModel, circuit: Circuit, rng: np.random.Generator
) -> list[tuple[tuple[int, int], tuple[str, ...]]]:
    """Sample error events for every gate instance of the circuit.

    Returns a list of ``((layer, position), paulis)`` in execution order, one
    entry per fired channel; ``paulis`` is aligned with the gate's qubits and
    may be all identity.  The insertion acts right after its gate.
    """
    out = []
    for li, gi, g in circuit.gates():
        ch = noise.gate.get(gate_class(g, circuit.n, noise.periodic))
        if ch is None or ch.rate == 0:
            continue
        if ch.per_qubit:
            fired = rng.random(len(g.qubits)) < ch.rate
            if not fired.any():
                continue
            picks = rng.integers(0, len(ch.alphabet), size=len(g.qubits))
            out.append(((li, gi), tuple(ch.alphabet[int(k)] if f else "I" for k, f in zip(picks, fired))))
        elif rng.random() < ch.rate:
            picks = rng.integers(0, len(ch.alphabet), size=len(g.qubits))
            out.append(((li, gi), tuple(ch.alphabet[int(k)] for k in picks)))
    return out


def sample_prep_errors(noise: NoiseModel, n: int, rng: np.random.Generator) -> tuple[str, ...]:
    """One Pauli per qubit drawn from the preparation distribution."""
    rows = noise.prep_rows(n)
    u = rng.random(n)
    picks = (u[:, None] >= np.cumsum(rows, axis=1)).sum(axis=1)
    return tuple("IXYZ"[min(int(k), 3)] for k in picks)


def sample_measurement_flips(noise: NoiseModel, n: int, rng: np.random.Generator) -> np.ndarray:
    flips = np.zeros(n, dtype=np.uint8)
    if noise.meas_flip > 0:
        flips = (rng.random(n) < noise.meas_flip).astype(np.uint8)
    if noise.meas_injector is not None:
        flips ^= np.array(noise.meas_injector, dtype=np.uint8)
    return flips


def insert_errors(
    circuit: Circuit, errors: Sequence[tuple[tuple[int, int], tuple[str, ...]]]
) -> Circuit:
    """Circuit with each sampled Pauli placed in its own layer after its gate's layer.

    Pauli layers placed after a whole layer act on qubits that no other gate of
    that layer touches, so the result equals inserting them right after the
    gate itself.
    """
    by_layer: dict[int, list[Gate]] = {}
    for (li, gi), paulis in errors:
        g = circuit.layers[li][gi]
        for q, p in zip(g.qubits, paulis):
            if p != "I":
                by_layer.setdefault(li, []).append(Gate(p, (q,)))
    layers: list[tuple[Gate, ...]] = []
    for li, layer in enumerate(circuit.layers):
        layers.append(layer)
        if li in by_layer:
            # Two errors on the same qubit in one layer cannot happen: gates are disjoint.
            layers.append(tuple(by_layer[li]))
    return Circuit(circuit.n, tuple(layers), circuit.measure, circuit.reverse_outcome, circuit.outcome_flip)


def bitflip_inject(p: Sequence[int] | np.ndarray, xi: Sequence[int] | np.ndarray) -> np.ndarray:
    """Return ``p XOR xi``."""
    p = np.asarray(p, dtype=np.uint8)
    xi = np.asarray(xi, dtype=np.uint8)
    if p.shape != xi.shape:
        raise ValueError("bit strings must have equal length")
    return p ^ xi


# Density-matrix oracle ------------------------------------------------------


def _noisy_density(prep, noise: NoiseModel, n: int) -> np.ndarray:
    if isinstance(prep, DenseState):
        rho = prep.density_matrix()
        circuit = None
    elif isinstance(prep, Circuit):
        rho = DenseState.zero(n).density_matrix()
        circuit = prep
    else:
        raise TypeError("ensemble members must be Circuit or DenseState")
    if circuit is not None:
        for _, _, g in circuit.gates():
            rho = apply_gate_density(rho, n, g)
            ch = noise.gate.get(gate_class(g, n, noise.periodic))
            if ch is None or ch.rate == 0:
                continue
            w = {p: 1.0 / len(ch.alphabet) for p in ch.alphabet}
            if ch.per_qubit:
                for q in g.qubits:
                    rho = (1 - ch.rate) * rho + ch.rate * pauli_twirl_density(rho, n, q, w)
                continue
            twirled = rho
            for q in g.qubits:
                twirled = pauli_twirl_density(twirled, n, q, w)
            rho = (1 - ch.rate) * rho + ch.rate * twirled
    rows = noise.prep_rows(n)
    for q in range(n):
        if rows[q, 0] < 1:
            rho = pauli_twirl_density(rho, n, q, dict(zip("IXYZ", rows[q])))
    return rho


def noisy_density_matrix(ensemble, noise: NoiseModel | None = None, n: int | None = None) -> np.ndarray:
    """Exact mixed state produced by a preparation ensemble under noise.

    Args:
        ensemble: A :class:`Circuit` run on ``|0^n>``, a :class:`DenseState`,
            or a list of ``(probability, member)`` pairs of those.
        noise: Gate noise acts after every gate of a preparation circuit;
            preparation noise acts on every qubit at the end.
        n: Qubit count (inferred when omitted).
    """
    noise = noise or NoiseModel()
    members = ensemble if isinstance(ensemble, list) else [(1.0, ensemble)]
    if n is None:
        n = members[0][1].n
    if n > DENSITY_CAP:
        raise ValueError(f"density oracle capped at {DENSITY_CAP} qubits, got {n}")
    total = sum(w for w, _ in members)
    if abs(total - 1) > 1e-12:
        raise ValueError("ensemble weights must sum to 1")
    rho = np.zeros((1 << n, 1 << n), dtype=complex)
    for w, member in members:
        rho += w * _noisy_density(member, noise, n)
    return rho


def density_oracle(ensemble, noise: NoiseModel | None, observable: np.ndarray, n: int | None = None) -> float:
    """``tr(rho O)`` for the exact noisy state of :func:`noisy_density_matrix`."""
    rho = noisy_density_matrix(ensemble, noise, n)
    return float(np.real(np.trace(rho @ np.asarray(observable))))


def gadgetize(noise: NoiseModel, per_qubit: bool = False) -> NoiseModel:
    """Replace long-range two-qubit noise by dephasing at the same rate.

    Args:
        noise: Model to transform; other gate classes are kept.
        per_qubit: Read the dephasing rate per qubit instead of per gate.
    """
    ch = noise.gate.get("long_range")
    if ch is None:
        return noise
    gate = dict(noise.gate)
    gate["long_range"] = PauliChannel("dephasing", ch.rate, per_qubit)
    return replace(noise, gate=gate)


# Pauli-frame propagation -----------------------------------------------------


def _propagate(g: Gate, x: np.ndarray, z: np.ndarray) -> None:
    name = g.name
    if name == "H":
        q = g.qubits[0]
        x[q], z[q] = z[q], x[q]
    elif name in ("S", "SDG"):
        q = g.qubits[0]
        z[q] ^= x[q]
    elif name == "CNOT":
        c, t = g.qubits
        x[t] ^= x[c]
        z[c] ^= z[t]
    elif name == "CZ":
        a, b = g.qubits
        z[a] ^= x[b]
        z[b] ^= x[a]


_ROTATION = {"X": ("H",), "Y": ("SDG", "H")}


def measurement_flip_string(
    circuit: Circuit, errors: Sequence[tuple[tuple[int, int], tuple[str, ...]]]
) -> np.ndarray:
    """Bit flips that sampled gate errors cause in the reported outcome.

    Each Pauli is pushed through the rest of the Clifford circuit and the
    basis rotation of the terminal measurement; its X part flips the raw
    outcome.  Signs are irrelevant to outcome statistics and are dropped.
    The returned string follows the reported bit order (after reversal).
    """
    if circuit.measure is None:
        raise ValueError("circuit has no terminal measurement")
    n = circuit.n
    x = np.zeros(n, dtype=np.uint8)
    z = np.zeros(n, dtype=np.uint8)
    pending: dict[tuple[int, int], tuple[str, ...]] = {pos: p for pos, p in errors}
    for li, gi, g in circuit.gates():
        _propagate(g, x, z)
        paulis = pending.get((li, gi))
        if paulis is not None:
            for q, p in zip(g.qubits, paulis):
                x[q] ^= p in "XY"
                z[q] ^= p in "ZY"
    for q, basis in enumerate(circuit.measure):
        for name in _ROTATION.get(basis, ()):
            _propagate(Gate(name, (q,)), x, z)
    flips = np.where(np.array(circuit.measure) == "N", 0, x).astype(np.uint8)
    return flips[::-1].copy() if circuit.reverse_outcome else flips
