"""Measurement circuits for equatorial POVMs and their depth-bounded synthesis.

Three constructions live here:

* :func:`espovm_measurement_circuit` turns a label ``A`` into the circuit that
  measures ``phi_{A + 2D(p)}`` (``A + D(p)`` for req) with outcome ``p``.
* :func:`cz_layers_edge_coloring` packs the CZ part into at most ``n`` layers
  using a Misra-Gries edge coloring.
* :func:`lnn_synthesize` realizes ``diag(i^{q_A(x)})`` on a line of qubits with
  nearest-neighbour CNOTs and phase gates, up to a qubit reversal that is
  absorbed into the classical outcome order.

The LNN construction tracks each qubit's content as a parity ``x_j + ... + x_k``
of a contiguous interval ``[j, k]`` (1-indexed).  Every phase term of the form
``i^{u y}`` with ``y`` such an interval parity can then be applied as ``S^u``
at a moment when some qubit holds exactly that interval.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, NamedTuple

import numpy as np

from .eqcore import EquatorialLabel, pair_indices, state_vector
from .qsim.circuit import Circuit, Gate
from .qsim.dense import circuit_unitary

_PHASE_GATE = {1: "S", 2: "Z", 3: "SDG"}


# ---------------------------------------------------------------------------
# Graphs and edge coloring
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CzGraph:
    """Simple undirected graph whose edges are CZ gates.

    Attributes:
        n: Number of vertices (qubits).
        edges: Sorted tuple of pairs ``(i, j)`` with ``i < j``.
    """

    n: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        clean = set()
        for e in self.edges:
            i, j = (int(v) for v in e)
            if i == j:
                raise ValueError(f"self-loop on vertex {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise IndexError(f"edge {(i, j)} out of range for n={self.n}")
            clean.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", tuple(sorted(clean)))

    @classmethod
    def from_label(cls, A: EquatorialLabel) -> CzGraph:
        iu, ju = pair_indices(A.n)
        on = np.nonzero(A.offdiag)[0]
        return cls(A.n, tuple((int(iu[k]), int(ju[k])) for k in on))

    @classmethod
    def complete(cls, n: int) -> CzGraph:
        return cls(n, tuple((i, j) for i in range(n) for j in range(i + 1, n)))

    def max_degree(self) -> int:
        deg = [0] * self.n
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return max(deg, default=0)

    def is_complete(self) -> bool:
        return len(self.edges) == self.n * (self.n - 1) // 2


def round_robin_matchings(n: int) -> list[list[tuple[int, int]]]:
    """Circle-method schedule of the complete graph on ``n`` vertices.

    Uses ``n`` rounds for odd ``n`` and ``n - 1`` rounds for even ``n``.
    """
    if n < 2:
        return []
    m = n if n % 2 == 0 else n + 1
    rounds = []
    for r in range(m - 1):
        pairs = [(r, m - 1)]
        for i in range(1, m // 2):
            pairs.append(((r + i) % (m - 1), (r - i) % (m - 1)))
        rounds.append(sorted((min(a, b), max(a, b)) for a, b in pairs if max(a, b) < n))
    return rounds


def misra_gries_coloring(n: int, edges: Iterable[tuple[int, int]]) -> dict[tuple[int, int], int]:
    """Proper edge coloring with at most ``max_degree + 1`` colors.

    Edges are processed in sorted order and every free-color choice takes the
    lowest available color, so the result is deterministic.
    """
    at: list[dict[int, int]] = [dict() for _ in range(n)]  # vertex -> {color: neighbour}
    color: dict[tuple[int, int], int] = {}

    def key(a: int, b: int) -> tuple[int, int]:
        return (a, b) if a < b else (b, a)

    def set_color(a: int, b: int, c: int) -> None:
        color[key(a, b)] = c
        at[a][c] = b
        at[b][c] = a

    def clear(a: int, b: int) -> None:
        c = color.pop(key(a, b))
        del at[a][c]
        del at[b][c]

    def lowest_free(v: int) -> int:
        c = 0
        while c in at[v]:
            c += 1
        return c

    def is_fan(u: int, fan: list[int]) -> bool:
        for prev, nxt in zip(fan, fan[1:]):
            c = color.get(key(u, nxt))
            if c is None or c in at[prev]:
                return False
        return True

    for u, v in sorted(key(a, b) for a, b in edges):
        fan = [v]
        used = {v}
        while True:
            last = fan[-1]
            ext = None
            for c in sorted(at[u]):
                w = at[u][c]
                if w not in used and c not in at[last]:
                    ext = w
                    break
            if ext is None:
                break
            fan.append(ext)
            used.add(ext)
        c = lowest_free(u)
        d = lowest_free(fan[-1])
        if c != d:
            # Swap colors along the maximal c/d alternating path starting at u.
            path = []
            x, cur = u, d
            while cur in at[x]:
                y = at[x][cur]
                path.append((x, y, cur))
                x, cur = y, (c if cur == d else d)
            for a, b, _ in path:
                clear(a, b)
            for a, b, col in path:
                set_color(a, b, c if col == d else d)
        stop = None
        for i, w in enumerate(fan):
            if d not in at[w] and is_fan(u, fan[: i + 1]):
                stop = i
                break
        if stop is None:  # pragma: no cover - excluded by the Misra-Gries lemma
            raise RuntimeError("edge coloring invariant violated")
        for i in range(stop):
            nxt = color[key(u, fan[i + 1])]
            clear(u, fan[i + 1])
            set_color(u, fan[i], nxt)
        set_color(u, fan[stop], d)
    return color


def cz_layers_edge_coloring(g: CzGraph) -> Circuit:
    """Schedule the CZ gates of ``g`` into layers of disjoint gates.

    Complete graphs use the round-robin schedule (``n`` layers for odd ``n``,
    ``n - 1`` for even); all other graphs use Misra-Gries, which needs at
    most ``max_degree + 1 <= n`` layers.
    """
    if not g.edges:
        return Circuit(g.n)
    if g.is_complete():
        matchings = round_robin_matchings(g.n)
    else:
        coloring = misra_gries_coloring(g.n, g.edges)
        groups: dict[int, list[tuple[int, int]]] = defaultdict(list)
        for e, c in coloring.items():
            groups[c].append(e)
        matchings = [sorted(groups[c]) for c in sorted(groups)]
    layers = tuple(tuple(Gate("CZ", e) for e in m) for m in matchings if m)
    return Circuit(g.n, layers)


# ---------------------------------------------------------------------------
# Measurement circuits
# ---------------------------------------------------------------------------


def _conjugate_label(A: EquatorialLabel) -> EquatorialLabel:
    """Label of the complex-conjugate state."""
    if A.scheme == "req":
        return A
    return EquatorialLabel("eq", A.n, (-A.diag.astype(np.int64)) % 4, A.offdiag)


def _diag_exponents(A: EquatorialLabel) -> np.ndarray:
    """Per-qubit Z4 exponent of the linear part of ``q_A``."""
    d = A.diag.astype(np.int64)
    return d % 4 if A.scheme == "eq" else (2 * d) % 4


# Phase gate i^{u x} followed by H and a Z measurement, written as (basis, flip).
_FOLDED_BASIS = {0: ("X", 0), 1: ("Y", 1), 2: ("X", 1), 3: ("Y", 0)}


def espovm_measurement_circuit(
    A: EquatorialLabel, alternative: bool = False, lnn: bool = False
) -> Circuit:
    """Circuit whose outcome ``p`` projects onto ``phi_{A.shifted(p)}``.

    The standard form applies CZ layers for the off-diagonal part, ``S^dagger``,
    ``Z`` or ``S`` for eq diagonal entries 1, 2, 3 (``Z`` for a req diagonal 1),
    a Hadamard layer and a computational-basis measurement.

    Args:
        A: Label of the POVM element to measure.
        alternative: Drop the diagonal phase gates and the Hadamard layer and
            measure each qubit in the X or Y basis instead, recording the
            outcome flips that a ``Z`` phase would have caused.  Req labels
            only ever need X.
        lnn: Replace the CZ layers and phase gates by :func:`lnn_synthesize`,
            which uses nearest-neighbour CNOTs and reverses the outcome order.

    Returns:
        A :class:`Circuit` with a terminal measurement.
    """
    n = A.n
    u = (-_diag_exponents(A)) % 4  # the circuit applies i^{-q_A}
    if lnn:
        body = lnn_synthesize(_conjugate_label(A), include_diagonal=not alternative)
        layers = body.layers
        order = list(range(n - 1, -1, -1))  # physical qubit q holds logical n-1-q
    else:
        layers = cz_layers_edge_coloring(CzGraph.from_label(A)).layers
        order = list(range(n))
        if not alternative:
            phase = tuple(Gate(_PHASE_GATE[int(u[q])], (q,)) for q in range(n) if u[q])
            if phase:
                layers = layers + (phase,)
    if alternative:
        bases, flips = zip(*(_FOLDED_BASIS[int(u[order[q]])] for q in range(n)))
        return Circuit(n, layers, tuple(bases), lnn, tuple(flips))
    layers = layers + (tuple(Gate("H", (q,)) for q in range(n)),)
    return Circuit(n, layers, ("Z",) * n, lnn)


# ---------------------------------------------------------------------------
# Nearest-neighbour synthesis
# ---------------------------------------------------------------------------


class PatternPair(NamedTuple):
    """Interval endpoint patterns for odd ``n``; both have length ``2n - 3``."""

    pj: tuple[int, ...]
    pk: tuple[int, ...]


class PhaseInsertion(NamedTuple):
    """A phase gate ``S^exponent`` placed after ``slot`` CNOT layers."""

    slot: int
    qubit: int
    exponent: int


def _brick(n: int, kind: str) -> tuple[Gate, ...]:
    """One layer of neighbour CNOTs (0-indexed qubits).

    ``O``/``E`` selects pairs starting at even/odd 0-indexed positions
    (odd/even 1-indexed); ``R`` points the target to the right, ``L`` left.
    """
    start = 0 if kind[0] == "O" else 1
    out = []
    for a in range(start, n - 1, 2):
        out.append(Gate("CNOT", (a, a + 1) if kind[1] == "R" else (a + 1, a)))
    return tuple(out)


def lnn_layers(n: int) -> tuple[list[tuple[Gate, ...]], list[tuple[Gate, ...]]]:
    """The two-layer blocks ``(C1, C2)`` of the repeated unit ``C = C1 C2``.

    ``C2`` acts first.  Applying ``C`` ``ceil((n+1)/2)`` times (a total of
    ``2n + 2`` layers, truncated for even ``n``) reverses the qubit order.
    """
    if n < 2:
        raise ValueError("nearest-neighbour synthesis needs n >= 2")
    c2 = [_brick(n, "OR"), _brick(n, "EL")]
    c1 = [_brick(n, "OL"), _brick(n, "ER")]
    return c1, c2


def lnn_cnot_sequence(n: int) -> list[tuple[Gate, ...]]:
    """The ``2n + 2`` CNOT layers in execution order."""
    c1, c2 = lnn_layers(n)
    unit = c2 + c1
    return [unit[i % 4] for i in range(2 * n + 2)]


def lnn_patterns(n: int) -> PatternPair:
    """Endpoint patterns ``Pj`` and ``Pk`` for odd ``n``.

    After ``t`` applications of ``C`` (``1 <= t <= (n-1)/2``), 1-indexed qubit
    ``i`` holds the interval with endpoints ``Pj[n-3-2(t-1)+i-1]`` and
    ``Pk[2(t-1)+i-1]``.  Even ``n`` has no such closed form here; its schedule
    comes from :func:`lnn_interval_schedule`.
    """
    if n < 2:
        raise ValueError("nearest-neighbour synthesis needs n >= 2")
    if n % 2 == 0:
        raise ValueError("closed-form patterns are defined for odd n only")
    pj = [n - 1]
    pj += [v for a in range(n - 3, 1, -2) for v in (a, a)]
    pj += [1, 1]
    pj += [v for a in range(3, n - 1, 2) for v in (a, a)]
    pk = [v for a in range(3, n + 1, 2) for v in (a, a)]
    pk += [v for a in range(n - 1, 3, -2) for v in (a, a)]
    pk += [2]
    return PatternPair(tuple(pj), tuple(pk))


def _interval(row: np.ndarray) -> tuple[int, int] | None:
    idx = np.nonzero(row)[0]
    if idx.size == 0 or idx[-1] - idx[0] + 1 != idx.size:
        return None
    return int(idx[0]) + 1, int(idx[-1]) + 1


def lnn_track(n: int) -> list[list[tuple[int, int] | None]]:
    """Interval held by each qubit after every CNOT layer (slot 0 is the input)."""
    state = np.eye(n, dtype=np.uint8)
    hist = [[_interval(r) for r in state]]
    for layer in lnn_cnot_sequence(n):
        for g in layer:
            c, t = g.qubits
            state[t] ^= state[c]
        hist.append([_interval(r) for r in state])
    return hist


@lru_cache(maxsize=None)
def lnn_interval_schedule(n: int) -> dict[tuple[int, int], tuple[int, int]]:
    """Map every interval ``[j, k]`` to a ``(slot, qubit)`` where it is held.

    Slots that are multiples of four (between whole applications of ``C``)
    are preferred, then earlier slots.  The table has ``n(n+1)/2`` entries.
    """
    hist = lnn_track(n)
    table: dict[tuple[int, int], tuple[int, int]] = {}
    for slot in sorted(range(len(hist)), key=lambda s: (s % 4 != 0, s)):
        for q, iv in enumerate(hist[slot]):
            if iv is not None and iv not in table:
                table[iv] = (slot, q)
    missing = n * (n + 1) // 2 - len(table)
    if missing:  # pragma: no cover - guarded by tests for every supported n
        raise RuntimeError(f"{missing} intervals never appear for n={n}")
    return table


def _expand(u: int, vars_: frozenset[int], out: dict[frozenset[int], int]) -> None:
    """Add ``i^{u * XOR(vars_)}`` to ``out`` as terms on at most two variables."""
    if not vars_ or u % 4 == 0:
        return
    if len(vars_) <= 2:
        out[vars_] = (out.get(vars_, 0) + u) % 4
        return
    items = sorted(vars_)
    a, b = frozenset(items[:1]), frozenset(items[1:2])
    c = frozenset(items[2:])
    # i^{a+b+c (xor)} = i^{3(a + b + c + a^b + a^c + b^c)}
    for part in (a, b, c, a | b, a | c, b | c):
        _expand(3 * u, part, out)


def decompose_cz_phase(mu: int, nu: int, n: int) -> list[tuple[tuple[int, ...], int]]:
    """Write ``(-1)^{x_mu x_nu}`` as a product of prefix-parity phases.

    With ``y_a = x_1 + ... + x_a`` (mod 2) and ``y_0 = 0``, the result is a
    list of ``(spec, u)`` meaning ``i^{u * y_a}`` for ``spec = (a,)`` and
    ``i^{u * (y_a XOR y_b)}`` for ``spec = (a, b)`` with ``a < b``.

    Args:
        mu: First qubit, 1-indexed.
        nu: Second qubit, ``mu < nu <= n``.
        n: Number of qubits.
    """
    if not 1 <= mu < nu <= n:
        raise ValueError(f"need 1 <= mu < nu <= n, got mu={mu}, nu={nu}, n={n}")

    def xvar(k: int) -> frozenset[int]:
        return frozenset({k, k - 1}) - {0}

    out: dict[frozenset[int], int] = {}
    _expand(3, xvar(mu), out)
    _expand(3, xvar(nu), out)
    _expand(1, xvar(mu) ^ xvar(nu), out)
    return [(tuple(sorted(s)), u) for s, u in sorted(out.items(), key=lambda kv: sorted(kv[0])) if u]


def _spec_interval(spec: tuple[int, ...]) -> tuple[int, int]:
    if len(spec) == 1:
        return 1, spec[0]
    return spec[0] + 1, spec[1]


def lnn_phase_insertions(A: EquatorialLabel, include_diagonal: bool = True) -> list[PhaseInsertion]:
    """Phase gates that make the CNOT skeleton realize ``diag(i^{q_A})``.

    Gates landing on the same location have their Z4 exponents summed.
    """
    n = A.n
    acc: dict[tuple[int, int], int] = defaultdict(int)
    if include_diagonal:
        for q, u in enumerate(_diag_exponents(A)):
            if u:
                acc[(q + 1, q + 1)] += int(u)
    iu, ju = pair_indices(n)
    for k in np.nonzero(A.offdiag)[0]:
        for spec, u in decompose_cz_phase(int(iu[k]) + 1, int(ju[k]) + 1, n):
            acc[_spec_interval(spec)] += u
    table = lnn_interval_schedule(n)
    out = []
    for iv, u in acc.items():
        if u % 4:
            slot, q = table[iv]
            out.append(PhaseInsertion(slot, q, u % 4))
    return sorted(out)


def lnn_synthesize(A: EquatorialLabel, include_diagonal: bool = True) -> Circuit:
    """Nearest-neighbour circuit equal to ``diag(i^{q_A})`` followed by a qubit reversal.

    The circuit has ``2n + 2`` CNOT layers with phase layers interleaved, and
    its ``reverse_outcome`` flag is set so that a terminal measurement reports
    bits in logical order.

    Args:
        A: Label to realize.
        include_diagonal: When false, the linear part of ``q_A`` is left out
            (used by the folded X/Y measurement form).
    """
    n = A.n
    if n == 1:
        u = int(_diag_exponents(A)[0]) if include_diagonal else 0
        layers = ((Gate(_PHASE_GATE[u], (0,)),),) if u else ()
        return Circuit(1, layers, reverse_outcome=True)
    by_slot: dict[int, list[Gate]] = defaultdict(list)
    for ins in lnn_phase_insertions(A, include_diagonal):
        by_slot[ins.slot].append(Gate(_PHASE_GATE[ins.exponent], (ins.qubit,)))
    layers: list[tuple[Gate, ...]] = []
    for slot, cnots in enumerate(lnn_cnot_sequence(n) + [None]):
        if by_slot.get(slot):
            layers.append(tuple(sorted(by_slot[slot], key=lambda g: g.qubits)))
        if cnots is not None:
            layers.append(cnots)
    return Circuit(n, tuple(layers), reverse_outcome=True)


def reversal_permutation(n: int) -> np.ndarray:
    """Unitary that reverses the qubit order on ``n`` qubits."""
    dim = 1 << n
    idx = np.arange(dim)
    rev = np.zeros(dim, dtype=np.int64)
    for q in range(n):
        rev |= ((idx >> q) & 1) << (n - 1 - q)
    mat = np.zeros((dim, dim))
    mat[rev, idx] = 1
    return mat


# ---------------------------------------------------------------------------
# Resource counts
# ---------------------------------------------------------------------------


def depth_and_counts(circuit: Circuit) -> dict[str, int]:
    """Layer depth and gate counts.

    ``depth`` counts every layer plus the terminal measurement;
    ``two_qubit_depth`` counts layers containing a two-qubit gate.
    """
    counts = dict(
        depth=circuit.depth,
        two_qubit_depth=0,
        cz_count=0,
        cnot_count=0,
        nn_cnot_count=0,
        single_qubit_count=0,
    )
    for layer in circuit.layers:
        if any(len(g.qubits) == 2 for g in layer):
            counts["two_qubit_depth"] += 1
        for g in layer:
            if g.name == "CZ":
                counts["cz_count"] += 1
            elif g.name == "CNOT":
                counts["cnot_count"] += 1
                if abs(g.qubits[0] - g.qubits[1]) == 1:
                    counts["nn_cnot_count"] += 1
            else:
                counts["single_qubit_count"] += 1
    return counts


def depth_comparison_table(n_values: Iterable[int], bias: float) -> list[dict[str, float]]:
    """Measurement depth on a line: equatorial, random Clifford and an approximate design."""
    if bias <= 0:
        raise ValueError("bias must be positive")
    return [
        dict(n=int(n), espovm_lnn=2 * n, clifford_lnn=3 * n, approx_design=20 * math.log(9 * n / bias))
        for n in n_values
    ]


def phase_distance(U: np.ndarray, V: np.ndarray) -> float:
    """``min_theta max|U - e^{i theta} V|`` with theta fixed by the largest entry of ``V``."""
    k = np.unravel_index(np.argmax(np.abs(V)), V.shape)
    if abs(U[k]) == 0:
        return float(np.abs(U - V).max())
    phase = U[k] / V[k]
    return float(np.abs(U - phase / abs(phase) * V).max())


def lnn_unitary_error(A: EquatorialLabel) -> float:
    """Distance of :func:`lnn_synthesize` from ``REV diag(i^{q_A})`` up to global phase."""
    target = reversal_permutation(A.n) @ np.diag(state_vector(A) * math.sqrt(2**A.n))
    return phase_distance(circuit_unitary(lnn_synthesize(A)), target)
