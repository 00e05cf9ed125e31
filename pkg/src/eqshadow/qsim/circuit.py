"""Layered Clifford circuits and their text format.

A circuit is a list of layers; gates within a layer act on disjoint qubits.
An optional terminal measurement assigns a basis (``X``, ``Y``, ``Z`` or
``N`` for unmeasured) to every qubit.  ``outcome_flip`` marks qubits whose
reported bit is inverted, and ``reverse_outcome`` records that the outcome
bits must be read in reverse qubit order (flips are applied first, in qubit
order).

Text format, one gate per line, layers separated by ``---``::

    H 0
    CZ 0 5
    ---
    CNOT 2 3
    ---
    MEAS X 1
    FLIP 1
    REVERSE

``MEAS``, ``FLIP`` and ``REVERSE`` lines may appear anywhere; they describe
the terminal measurement and are not part of any layer.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple, Sequence

SINGLE_QUBIT_GATES = frozenset({"H", "S", "SDG", "Z", "X", "Y", "I"})
TWO_QUBIT_GATES = frozenset({"CZ", "CNOT"})
GATE_NAMES = SINGLE_QUBIT_GATES | TWO_QUBIT_GATES
BASES = frozenset({"X", "Y", "Z", "N"})

_INVERSE = {"S": "SDG", "SDG": "S"}


class Gate(NamedTuple):
    """A gate name and the qubits it acts on (control first for CNOT)."""

    name: str
    qubits: tuple[int, ...]

    def inverse(self) -> Gate:
        return Gate(_INVERSE.get(self.name, self.name), self.qubits)


def gate(name: str, *qubits: int) -> Gate:
    name = name.upper()
    if name not in GATE_NAMES:
        raise ValueError(f"unknown gate {name!r}")
    arity = 2 if name in TWO_QUBIT_GATES else 1
    if len(qubits) != arity:
        raise ValueError(f"{name} takes {arity} qubit(s), got {len(qubits)}")
    if arity == 2 and qubits[0] == qubits[1]:
        raise ValueError(f"{name} needs two distinct qubits")
    return Gate(name, tuple(int(q) for q in qubits))


@dataclass(frozen=True)
class Circuit:
    """Layered circuit on ``n`` qubits.

    Attributes:
        n: Number of qubits.
        layers: Tuple of layers, each a tuple of gates with disjoint supports.
        measure: Per-qubit terminal measurement basis, or ``None``.
        reverse_outcome: Whether outcome bits are read in reversed qubit order.
        outcome_flip: Per-qubit bits XORed into the raw outcome, or ``None``.
    """

    n: int
    layers: tuple[tuple[Gate, ...], ...] = ()
    measure: tuple[str, ...] | None = None
    reverse_outcome: bool = False
    outcome_flip: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        layers = tuple(tuple(Gate(g.name, tuple(g.qubits)) for g in layer) for layer in self.layers)
        object.__setattr__(self, "layers", layers)
        if self.measure is not None:
            object.__setattr__(self, "measure", tuple(b.upper() for b in self.measure))
        if self.outcome_flip is not None:
            object.__setattr__(self, "outcome_flip", tuple(int(b) & 1 for b in self.outcome_flip))
        self.validate()

    def validate(self) -> None:
        for li, layer in enumerate(self.layers):
            seen: set[int] = set()
            for g in layer:
                if g.name not in GATE_NAMES:
                    raise ValueError(f"unknown gate {g.name!r}")
                for q in g.qubits:
                    if not 0 <= q < self.n:
                        raise IndexError(f"qubit {q} out of range for n={self.n}")
                    if q in seen:
                        raise ValueError(f"layer {li} has overlapping supports on qubit {q}")
                    seen.add(q)
        if self.measure is not None:
            if len(self.measure) != self.n:
                raise ValueError("measurement spec must name a basis for every qubit")
            bad = set(self.measure) - BASES
            if bad:
                raise ValueError(f"unknown measurement bases {sorted(bad)}")
        if self.outcome_flip is not None and len(self.outcome_flip) != self.n:
            raise ValueError("outcome flips must cover every qubit")

    def gates(self) -> Iterator[tuple[int, int, Gate]]:
        """Yield ``(layer index, position in layer, gate)`` in execution order."""
        for li, layer in enumerate(self.layers):
            for gi, g in enumerate(layer):
                yield li, gi, g

    @property
    def depth(self) -> int:
        """Number of layers, counting a terminal measurement as one layer."""
        return len(self.layers) + (1 if self.measure is not None else 0)

    def unitary_part(self) -> Circuit:
        return Circuit(self.n, self.layers)

    def inverse(self) -> Circuit:
        """Inverse of the unitary part (measurement dropped)."""
        return Circuit(self.n, tuple(tuple(g.inverse() for g in layer) for layer in reversed(self.layers)))

    def then(self, other: Circuit) -> Circuit:
        """Run ``self`` and then ``other``; keeps ``other``'s measurement."""
        if other.n != self.n:
            raise ValueError("qubit counts differ")
        return Circuit(
            self.n, self.layers + other.layers, other.measure, other.reverse_outcome, other.outcome_flip
        )

    def with_measurement(
        self, bases: Sequence[str] | str, reverse: bool = False, flip: Sequence[int] | None = None
    ) -> Circuit:
        if isinstance(bases, str):
            bases = (bases,) * self.n
        return Circuit(self.n, self.layers, tuple(bases), reverse, None if flip is None else tuple(flip))

    def to_text(self) -> str:
        blocks = ["\n".join(f"{g.name} " + " ".join(map(str, g.qubits)) for g in layer) for layer in self.layers]
        tail = []
        if self.measure is not None:
            tail = [f"MEAS {b} {q}" for q, b in enumerate(self.measure) if b != "N"]
        if self.outcome_flip is not None:
            tail += [f"FLIP {q}" for q, b in enumerate(self.outcome_flip) if b]
        if self.reverse_outcome:
            tail.append("REVERSE")
        if tail:
            blocks.append("\n".join(tail))
        return "\n---\n".join(blocks) + "\n"


def layered(n: int, layers: Iterable[Iterable[Gate]], **kwargs) -> Circuit:
    return Circuit(n, tuple(tuple(layer) for layer in layers), **kwargs)


def parse_circuit(text: str, n: int | None = None) -> Circuit:
    """Parse the text format; ``n`` defaults to one more than the largest index."""
    layers: list[list[Gate]] = [[]]
    meas: dict[int, str] = {}
    flips: set[int] = set()
    reverse = False
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line == "---":
            layers.append([])
            continue
        parts = line.split()
        head = parts[0].upper()
        if head == "REVERSE":
            reverse = True
        elif head == "FLIP":
            flips.add(int(parts[1]))
        elif head == "MEAS":
            if len(parts) != 3:
                raise ValueError(f"malformed measurement line {raw!r}")
            meas[int(parts[2])] = parts[1].upper()
        else:
            layers[-1].append(gate(head, *(int(p) for p in parts[1:])))
    layers = [layer for layer in layers if layer]
    top = max([q for layer in layers for g in layer for q in g.qubits] + list(meas) + list(flips) + [-1])
    if n is None:
        n = top + 1
    measure = None
    if meas:
        measure = tuple(meas.get(q, "N") for q in range(n))
    flip = tuple(int(q in flips) for q in range(n)) if flips else None
    return Circuit(n, tuple(tuple(layer) for layer in layers), measure, reverse, flip)
