"""Exact mathematics of (real) equatorial stabilizer states.

An equatorial stabilizer state on ``n`` qubits is

    phi_A = 2^{-n/2} sum_x i^{q_A(x)} |x>,

where the label ``A`` is a symmetric matrix with a Z4 diagonal (``eq``) or Z2
diagonal (``req``) and Z2 off-diagonal entries.  This module holds the label
type, phase and overlap evaluation, the moment oracles used to certify the
tomography identities, and frame-operator checks for informational
completeness.

Bit strings are plain ``uint8`` arrays of length ``n``.  Basis index ``k``
corresponds to the big-endian bit string of ``k``: qubit 0 is the most
significant bit.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

SCHEMES = ("eq", "req")

# Largest label enumeration we allow (eq at n=4 has 2^14 labels).
_ENUMERATION_CAP = 1 << 16


def _modulus(scheme: str) -> int:
    if scheme == "eq":
        return 4
    if scheme == "req":
        return 2
    raise ValueError(f"unknown scheme {scheme!r}; expected 'eq' or 'req'")


def _as_rng(seed: int | np.random.Generator | None) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def pair_indices(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Row and column indices of the strictly upper triangle, row-major."""
    return np.triu_indices(n, 1)


def num_pairs(n: int) -> int:
    return n * (n - 1) // 2


# ---------------------------------------------------------------------------
# Labels
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EquatorialLabel:
    """Label matrix of an equatorial stabilizer state.

    Attributes:
        scheme: ``"eq"`` (complex phases, Z4 diagonal) or ``"req"`` (real
            phases, Z2 diagonal).
        n: Number of qubits.
        diag: Length-``n`` diagonal, entries reduced modulo 4 or 2.
        offdiag: ``n(n-1)/2`` bits for the pairs ``i<j`` in row-major order.
            The matrix is symmetric, so only the upper triangle is stored.
    """

    scheme: str
    n: int
    diag: np.ndarray = field(repr=False)
    offdiag: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        mod = _modulus(self.scheme)
        if self.n < 1:
            raise ValueError("n must be at least 1")
        diag = np.array(self.diag, dtype=np.int64).reshape(-1)
        off = np.array(self.offdiag, dtype=np.int64).reshape(-1)
        if diag.shape != (self.n,):
            raise ValueError(f"diag must have length {self.n}, got {diag.shape[0]}")
        if off.shape != (num_pairs(self.n),):
            raise ValueError(
                f"offdiag must have length {num_pairs(self.n)}, got {off.shape[0]}"
            )
        if np.any((diag < 0) | (diag >= mod)):
            raise ValueError(f"diag entries must lie in Z{mod}")
        if np.any((off < 0) | (off > 1)):
            raise ValueError("offdiag entries must be bits")
        diag = diag.astype(np.int8)
        off = off.astype(np.uint8)
        diag.flags.writeable = False
        off.flags.writeable = False
        object.__setattr__(self, "diag", diag)
        object.__setattr__(self, "offdiag", off)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EquatorialLabel):
            return NotImplemented
        return (
            self.scheme == other.scheme
            and self.n == other.n
            and np.array_equal(self.diag, other.diag)
            and np.array_equal(self.offdiag, other.offdiag)
        )

    def __hash__(self) -> int:
        return hash((self.scheme, self.n, self.diag.tobytes(), self.offdiag.tobytes()))

    def __repr__(self) -> str:
        return f"EquatorialLabel({self.to_text()!r})"

    @classmethod
    def zero(cls, scheme: str, n: int) -> EquatorialLabel:
        return cls(scheme, n, np.zeros(n, dtype=np.int64), np.zeros(num_pairs(n), dtype=np.int64))

    @classmethod
    def from_matrix(cls, scheme: str, mat: np.ndarray) -> EquatorialLabel:
        """Build a label from a full symmetric matrix."""
        mat = np.asarray(mat, dtype=np.int64)
        n = mat.shape[0]
        if mat.shape != (n, n) or not np.array_equal(mat, mat.T):
            raise ValueError("label matrix must be square and symmetric")
        iu = pair_indices(n)
        return cls(scheme, n, np.diag(mat) % _modulus(scheme), mat[iu] % 2)

    def matrix(self) -> np.ndarray:
        """Full symmetric integer matrix with the diagonal on the diagonal."""
        mat = np.zeros((self.n, self.n), dtype=np.int64)
        iu = pair_indices(self.n)
        mat[iu] = self.offdiag
        mat = mat + mat.T
        mat[np.diag_indices(self.n)] = self.diag
        return mat

    def adjacency(self) -> np.ndarray:
        """Off-diagonal part as a 0/1 adjacency matrix (the CZ graph)."""
        mat = self.matrix()
        mat[np.diag_indices(self.n)] = 0
        return mat

    def shifted(self, p: Sequence[int] | np.ndarray) -> EquatorialLabel:
        """Fold a measurement outcome into the diagonal.

        Returns ``A + 2 D(p) mod 4`` for eq and ``A + D(p) mod 2`` for req.
        """
        p = np.asarray(p, dtype=np.int64)
        if p.shape != (self.n,):
            raise ValueError("outcome length does not match label")
        step = 2 if self.scheme == "eq" else 1
        mod = _modulus(self.scheme)
        return EquatorialLabel(self.scheme, self.n, (self.diag + step * p) % mod, self.offdiag)

    def as_eq(self) -> EquatorialLabel:
        """The same state written as an eq label (req diagonal doubled)."""
        if self.scheme == "eq":
            return self
        return EquatorialLabel("eq", self.n, 2 * self.diag.astype(np.int64), self.offdiag)

    def to_text(self) -> str:
        diag = "".join(str(int(v)) for v in self.diag)
        off = "".join(str(int(v)) for v in self.offdiag)
        return f"{self.scheme}:{self.n}:{diag}:{off}"

    @classmethod
    def from_text(cls, text: str) -> EquatorialLabel:
        """Parse the canonical ``scheme:n:diag:offdiag`` form."""
        parts = text.strip().split(":")
        if len(parts) != 4:
            raise ValueError(f"malformed label text {text!r}")
        scheme, n_txt, diag_txt, off_txt = parts
        n = int(n_txt)
        return cls(scheme, n, [int(c) for c in diag_txt], [int(c) for c in off_txt])


def label_count(scheme: str, n: int) -> int:
    """Number of distinct labels (and hence states) for ``scheme`` on ``n`` qubits.

    Python integers are arbitrary precision, so no overflow signal is needed.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    _modulus(scheme)
    if scheme == "eq":
        return 2 ** ((n * n + 3 * n) // 2)
    return 2 ** ((n * n + n) // 2)


def sample_label_uniform(
    scheme: str, n: int, seed: int | np.random.Generator | None = None
) -> EquatorialLabel:
    """Draw a label uniformly at random."""
    rng = _as_rng(seed)
    diag = rng.integers(0, _modulus(scheme), size=n)
    off = rng.integers(0, 2, size=num_pairs(n))
    return EquatorialLabel(scheme, n, diag, off)


def sample_label_arrays(
    scheme: str, n: int, size: int, seed: int | np.random.Generator | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Batch version of :func:`sample_label_uniform` returning raw arrays."""
    rng = _as_rng(seed)
    diag = rng.integers(0, _modulus(scheme), size=(size, n))
    off = rng.integers(0, 2, size=(size, num_pairs(n)))
    return diag, off


def label_arrays(scheme: str, n: int) -> tuple[np.ndarray, np.ndarray]:
    """All labels of a scheme as ``(diag, offdiag)`` integer arrays.

    Row ``r`` of both arrays describes one label; rows enumerate the full
    label set exactly once.
    """
    count = label_count(scheme, n)
    if count > _ENUMERATION_CAP:
        raise ValueError(f"{count} labels exceed the enumeration cap {_ENUMERATION_CAP}")
    mod = _modulus(scheme)
    m = num_pairs(n)
    idx = np.arange(count)
    off_idx = idx % (1 << m)
    diag_idx = idx >> m
    off = (off_idx[:, None] >> np.arange(m - 1, -1, -1)) & 1 if m else np.zeros((count, 0), np.int64)
    diag = (diag_idx[:, None] // mod ** np.arange(n - 1, -1, -1)) % mod
    return diag.astype(np.int64), off.astype(np.int64)


def all_labels(scheme: str, n: int) -> Iterator[EquatorialLabel]:
    diag, off = label_arrays(scheme, n)
    for d, o in zip(diag, off):
        yield EquatorialLabel(scheme, n, d, o)


# ---------------------------------------------------------------------------
# Bit strings and phases
# ---------------------------------------------------------------------------


def basis_bits(n: int) -> np.ndarray:
    """All ``2^n`` bit strings as rows of a ``(2^n, n)`` array, big-endian."""
    idx = np.arange(1 << n)
    return ((idx[:, None] >> np.arange(n - 1, -1, -1)) & 1).astype(np.int64)


def bits_to_index(bits: np.ndarray) -> np.ndarray | int:
    bits = np.asarray(bits, dtype=np.int64)
    n = bits.shape[-1]
    weights = 1 << np.arange(n - 1, -1, -1)
    out = bits @ weights
    return int(out) if np.ndim(out) == 0 else out


def index_to_bits(index: int, n: int) -> np.ndarray:
    return ((int(index) >> np.arange(n - 1, -1, -1)) & 1).astype(np.uint8)


def _pair_products(bits: np.ndarray) -> np.ndarray:
    """``x_i x_j`` for all pairs ``i<j``; works on the last axis."""
    n = bits.shape[-1]
    iu, ju = pair_indices(n)
    return bits[..., iu] * bits[..., ju]


def phase_exponents(
    scheme: str, diag: np.ndarray, offdiag: np.ndarray, bits: np.ndarray
) -> np.ndarray:
    """Z4 phase exponents ``q`` for batches of labels and bit strings.

    Args:
        scheme: ``"eq"`` or ``"req"``.
        diag: ``(B, n)`` diagonal entries.
        offdiag: ``(B, n(n-1)/2)`` off-diagonal bits.
        bits: ``(X, n)`` bit strings.

    Returns:
        ``(B, X)`` integer array of exponents in ``{0,1,2,3}``.
    """
    diag = np.atleast_2d(np.asarray(diag, dtype=np.int64))
    offdiag = np.asarray(offdiag, dtype=np.int64).reshape(diag.shape[0], -1)
    bits = np.atleast_2d(np.asarray(bits, dtype=np.int64))
    lin = diag @ bits.T
    quad = offdiag @ _pair_products(bits).T if offdiag.shape[1] else 0
    if scheme == "eq":
        return (lin + 2 * quad) % 4
    if scheme == "req":
        return 2 * ((lin + quad) % 2)
    raise ValueError(f"unknown scheme {scheme!r}")


def quadratic_phase(A: EquatorialLabel, x: Sequence[int] | np.ndarray) -> int:
    """Z4 exponent ``q`` with ``<x|phi_A> = i^q / 2^{n/2}``."""
    x = np.asarray(x, dtype=np.int64)
    if x.shape != (A.n,):
        raise ValueError(f"bit string length {x.shape} does not match n={A.n}")
    return int(phase_exponents(A.scheme, A.diag[None], A.offdiag[None], x[None])[0, 0])


def amplitude(A: EquatorialLabel, x: Sequence[int] | np.ndarray) -> complex:
    return complex(1j ** quadratic_phase(A, x)) / math.sqrt(2**A.n)


_I_POWERS = np.array([1, 1j, -1, -1j], dtype=complex)


def state_vector(A: EquatorialLabel) -> np.ndarray:
    """Dense amplitude vector of ``phi_A``."""
    q = phase_exponents(A.scheme, A.diag[None], A.offdiag[None], basis_bits(A.n))[0]
    return _I_POWERS[q] / math.sqrt(2**A.n)


def label_state_matrix(scheme: str, n: int) -> np.ndarray:
    """Rows are the state vectors of all labels, in :func:`label_arrays` order."""
    diag, off = label_arrays(scheme, n)
    q = phase_exponents(scheme, diag, off, basis_bits(n))
    return _I_POWERS[q] / math.sqrt(2**n)


def overlap_dense(A: EquatorialLabel, psi: np.ndarray) -> complex:
    """``<phi_A|psi>`` summed exactly over all ``2^n`` basis states."""
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    if psi.shape[0] != 1 << A.n:
        raise ValueError("state dimension does not match label")
    return complex(np.vdot(state_vector(A), psi))


def overlap_sparse(A: EquatorialLabel, bits: np.ndarray, coeffs: np.ndarray) -> complex:
    """``<phi_A|psi>`` for ``psi = sum_j coeffs[j] |bits[j]>``.

    Cost is ``O(L n^2)`` for ``L`` components.
    """
    bits = np.atleast_2d(np.asarray(bits, dtype=np.int64))
    coeffs = np.asarray(coeffs, dtype=complex).reshape(-1)
    if bits.shape[1] != A.n or bits.shape[0] != coeffs.shape[0]:
        raise ValueError("component array shape does not match label")
    if len({row.tobytes() for row in bits}) != bits.shape[0]:
        raise ValueError("duplicate component bit strings")
    q = phase_exponents(A.scheme, A.diag[None], A.offdiag[None], bits)[0]
    return complex(np.sum(np.conj(_I_POWERS[q]) * coeffs)) / math.sqrt(2**A.n)


# ---------------------------------------------------------------------------
# Quadratic Gauss sums
# ---------------------------------------------------------------------------


def quadratic_gauss_sum(linear: np.ndarray, cross: np.ndarray, const: int = 0) -> complex:
    """Evaluate ``sum_x i^{const + sum_i d_i x_i + 2 sum_{i<j} e_ij x_i x_j}``.

    ``linear`` holds ``d`` in Z4 and ``cross`` is a symmetric 0/1 matrix ``e``
    (its diagonal is ignored).  Variables are eliminated one at a time, so the
    cost is ``O(n^3)``.  A variable with odd linear coefficient is summed out
    directly; its neighbours pick up a Z4-lifted parity.  A variable with even
    coefficient forces a linear constraint, which is solved for one neighbour
    and substituted back.
    """
    d = np.array(linear, dtype=np.int64).reshape(-1) % 4
    n = d.shape[0]
    e = np.array(cross, dtype=np.int64).reshape(n, n) & 1
    e[np.diag_indices(n)] = 0
    if not np.array_equal(e, e.T):
        raise ValueError("cross-term matrix must be symmetric")
    alive = np.ones(n, dtype=bool)
    const = int(const) % 4
    log2_scale = 0  # magnitude is 2^{log2_scale / 2}
    eighth = 0  # accumulated phase in units of e^{i pi / 4}

    def remove(v: int) -> None:
        alive[v] = False
        e[v, :] = 0
        e[:, v] = 0
        d[v] = 0

    while alive.any():
        k = int(np.flatnonzero(alive)[0])
        nbrs = (e[k] == 1) & alive
        nbrs[k] = False
        if d[k] % 2 == 1:
            sigma = 1 if d[k] == 1 else -1
            log2_scale += 1
            eighth += sigma
            remove(k)
            d[nbrs] = (d[nbrs] - sigma) % 4
            toggle = np.outer(nbrs, nbrs)
            np.fill_diagonal(toggle, False)
            e ^= toggle.astype(np.int64)
            continue
        if not nbrs.any():
            if d[k] == 2:
                return 0j
            log2_scale += 2
            remove(k)
            continue
        cbit = int(d[k] // 2)
        log2_scale += 2
        remove(k)
        members = np.flatnonzero(nbrs)
        m = int(members[0])
        t = np.zeros(n, dtype=bool)
        t[members[1:]] = True
        # Substitute x_m = c XOR (XOR_{j in t} x_j) into the remaining form.
        dm = int(d[m])
        nm = (e[m] == 1) & alive
        nm[m] = False
        remove(m)
        const = (const + dm * cbit) % 4
        d[t] = (d[t] + dm * (1 - 2 * cbit)) % 4
        if dm % 2:
            toggle = np.outer(t, t)
            np.fill_diagonal(toggle, False)
            e ^= toggle.astype(np.int64)
        d[nm] = (d[nm] + 2 * cbit) % 4
        d[nm & t] = (d[nm & t] + 2) % 4
        cross_t = np.outer(nm, t).astype(np.int64)
        cross_t = (cross_t + cross_t.T) & 1
        np.fill_diagonal(cross_t, 0)
        e ^= cross_t
    magnitude = 2.0 ** (log2_scale / 2)
    return magnitude * np.exp(1j * np.pi * eighth / 4) * _I_POWERS[const]


def graph_state_vector(gamma: np.ndarray, b: Sequence[int] | np.ndarray | None = None) -> np.ndarray:
    """Dense ``2^{-n/2} sum_x (-1)^{sum_{i<j} G_ij x_i x_j + b.x} |x>``."""
    gamma = np.asarray(gamma, dtype=np.int64)
    n = gamma.shape[0]
    b = np.zeros(n, dtype=np.int64) if b is None else np.asarray(b, dtype=np.int64)
    bits = basis_bits(n)
    iu = pair_indices(n)
    expo = _pair_products(bits) @ gamma[iu] + bits @ b
    return np.where(expo % 2 == 0, 1.0, -1.0).astype(complex) / math.sqrt(2**n)


def gauss_overlap_quadratic(
    A: EquatorialLabel,
    gamma: np.ndarray,
    b: Sequence[int] | np.ndarray | None = None,
    global_phase: complex = 1.0,
) -> complex:
    """``<phi_A|psi_{gamma,b}>`` for a graph state with sign character ``b``.

    The overlap is ``2^{-n} sum_x i^{-q_A(x) + 2 q_gamma(x) + 2 b.x}``, computed
    by :func:`quadratic_gauss_sum` in ``O(n^3)``.  Req labels are promoted to
    eq labels first.
    """
    gamma = np.asarray(gamma, dtype=np.int64)
    n = A.n
    if gamma.shape != (n, n):
        raise ValueError("graph adjacency shape does not match label")
    if not np.array_equal(gamma, gamma.T) or np.any(np.diag(gamma) != 0):
        raise ValueError("graph adjacency must be symmetric with zero diagonal")
    b = np.zeros(n, dtype=np.int64) if b is None else np.asarray(b, dtype=np.int64)
    A = A.as_eq()
    linear = (-A.diag.astype(np.int64) + 2 * b) % 4
    cross = (A.adjacency() + gamma) % 2
    return complex(global_phase * quadratic_gauss_sum(linear, cross) / 2.0**n)


# ---------------------------------------------------------------------------
# K-set predicates and moments
# ---------------------------------------------------------------------------

_PERFECT_MATCHINGS = [
    ((0, a), tuple(sorted(set(range(1, 6)) - {a}))) for a in range(1, 6)
]


def _pairings_of_six() -> list[tuple[tuple[int, int], ...]]:
    out = []
    for first, rest in _PERFECT_MATCHINGS:
        r0 = rest[0]
        for partner in rest[1:]:
            last = tuple(v for v in rest[1:] if v != partner)
            out.append((first, (r0, partner), last))
    return out


_PAIRINGS = _pairings_of_six()


def k_set_mask(variant: str, codes: np.ndarray) -> np.ndarray:
    """Vectorised K-set membership.

    Args:
        variant: ``"K1"`` or ``"K2"``.
        codes: ``(6, N)`` integer array; row ``r`` holds the ``r``-th string
            of each six-tuple ``(x, y, z | w, s, t)`` encoded as an integer.

    Returns:
        Boolean array of length ``N``.
    """
    v = np.asarray(codes)
    if v.shape[0] != 6:
        raise ValueError("six-tuples need six rows")
    in_k1 = np.zeros(v.shape[1], dtype=bool)
    for (a, b), (c, d), (e, f) in _PAIRINGS:
        in_k1 |= (v[a] == v[b]) & (v[c] == v[d]) & (v[e] == v[f])
    if variant == "K1":
        return in_k1
    if variant != "K2":
        raise ValueError(f"unknown K-set variant {variant!r}")
    bad = np.zeros_like(in_k1)
    for a in range(3):
        for b in range(3, 6):
            ka, kb = [i for i in range(3) if i != a]
            ba, bb = [i for i in range(3, 6) if i != b]
            shared = v[a] == v[b]
            ket_pair = v[ka] == v[kb]
            bra_pair = v[ba] == v[bb]
            bra_follows = (v[ba] == v[ka]) & bra_pair
            ket_follows = (v[ka] == v[ba]) & ket_pair
            bad |= shared & ket_pair & ~bra_follows
            bad |= shared & bra_pair & ~ket_follows
    return in_k1 & ~bad


def k_set_contains(variant: str, v: Sequence[Sequence[int]]) -> bool:
    """Membership of one six-tuple of bit strings in K1 or K2."""
    rows = [tuple(int(b) for b in s) for s in v]
    if len(rows) != 6 or len({len(r) for r in rows}) != 1:
        raise ValueError("expected six bit strings of equal length")
    codes = np.array([[int(bits_to_index(np.array(r, dtype=np.int64))) if r else 0] for r in rows])
    return bool(k_set_mask(variant, codes)[0])


def moment_exact(scheme: str, n: int, t: int) -> np.ndarray:
    """Average of ``|phi_A><phi_A|^{(x) t}`` over every label, by enumeration."""
    if t not in (1, 2, 3):
        raise ValueError("t must be 1, 2 or 3")
    if n > 3 and t == 3:
        raise ValueError("third moments are enumerated only for n <= 3")
    vecs = label_state_matrix(scheme, n)
    tensor = vecs
    for _ in range(t - 1):
        tensor = np.einsum("ri,rj->rij", tensor, vecs).reshape(vecs.shape[0], -1)
    return tensor.T @ tensor.conj() / vecs.shape[0]


def _c_terms(n: int) -> dict[str, np.ndarray]:
    """The five structured operators spanning the third moments."""
    d = 1 << n
    size = d**3
    terms = {k: np.zeros((size, size)) for k in ("i", "ii", "iii", "iv", "v")}

    def idx(a, b, c):
        return (a * d + b) * d + c

    x, y, z = np.meshgrid(np.arange(d), np.arange(d), np.arange(d), indexing="ij")
    x, y, z = x.ravel(), y.ravel(), z.ravel()
    xs, ys = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
    xs, ys = xs.ravel(), ys.ravel()
    xx = np.arange(d)

    np.add.at(terms["i"], (idx(xx, xx, xx), idx(xx, xx, xx)), 1)
    singles = [idx(ys, xs, xs), idx(xs, ys, xs), idx(xs, xs, ys)]
    for r in singles:
        for c in singles:
            np.add.at(terms["ii"], (r, c), 1)
    yyy = idx(ys, ys, ys)
    for r in singles:
        np.add.at(terms["iii"], (r, yyy), 1)
        np.add.at(terms["iii"], (yyy, r), 1)
    ket = idx(x, y, z)
    for perm in itertools.permutations((x, y, z)):
        np.add.at(terms["iv"], (ket, idx(*perm)), 1)
    # x, y, z here play the roles of the three free strings in C^(v).
    kets = [idx(x, x, z), idx(x, z, x), idx(z, x, x)]
    bras = [idx(y, y, z), idx(y, z, y), idx(z, y, y)]
    for r in kets:
        for c in bras:
            np.add.at(terms["v"], (r, c), 1)
    return terms


def moment_c_combination(scheme: str, n: int) -> np.ndarray:
    """Third moment written through the five structured operators."""
    c = _c_terms(n)
    if scheme == "eq":
        total = 4 * c["i"] - c["ii"] + c["iv"]
    else:
        total = 16 * c["i"] - 2 * c["ii"] - 2 * c["iii"] + c["iv"] + c["v"]
    return total / 8.0**n


def moment_k_filter(scheme: str, n: int) -> np.ndarray:
    """Third moment as the sum of ``|xyz><wst|`` over the scheme's K-set."""
    if n > 3:
        raise ValueError("the 2^{6n} six-tuple filter is capped at n <= 3")
    d = 1 << n
    codes = np.indices((d,) * 6).reshape(6, -1)
    mask = k_set_mask("K2" if scheme == "eq" else "K1", codes)
    kept = codes[:, mask]
    rows = (kept[0] * d + kept[1]) * d + kept[2]
    cols = (kept[3] * d + kept[4]) * d + kept[5]
    out = np.zeros((d**3, d**3))
    np.add.at(out, (rows, cols), 1.0)
    return out / 8.0**n


def _swap(d: int) -> np.ndarray:
    out = np.zeros((d * d, d * d))
    a, b = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
    out[(a * d + b).ravel(), (b * d + a).ravel()] = 1
    return out


def moment_closed_form(scheme: str, n: int, t: int, method: str = "kset") -> np.ndarray:
    """Closed-form ``t``-th moment of the label ensemble.

    Args:
        scheme: ``"eq"`` or ``"req"``.
        n: Number of qubits.
        t: Moment order, 1 to 3.
        method: For ``t=3``, ``"kset"`` sums over the six-tuple filter and
            ``"combination"`` uses the structured operators.  Both agree.
    """
    _modulus(scheme)
    d = 1 << n
    if t == 1:
        return np.eye(d) / d
    if t == 2:
        diag_xx = np.zeros((d * d, d * d))
        xx = np.arange(d) * (d + 1)
        diag_xx[xx, xx] = 1
        out = np.eye(d * d) + _swap(d)
        if scheme == "eq":
            out = out - diag_xx
        else:
            all_xx = np.zeros((d * d, d * d))
            all_xx[np.ix_(xx, xx)] = 1
            out = out + all_xx - 2 * diag_xx
        return out / d**2
    if t == 3:
        if method == "kset":
            return moment_k_filter(scheme, n)
        if method == "combination":
            return moment_c_combination(scheme, n)
        raise ValueError(f"unknown method {method!r}")
    raise ValueError("t must be 1, 2 or 3")


# ---------------------------------------------------------------------------
# POVMs and frame operators
# ---------------------------------------------------------------------------


def espovm_elements(scheme: str, n: int) -> list[tuple[float, np.ndarray]]:
    """All (weight, state) pairs of the (R)ESPOVM; weights are ``2^n/|S|``."""
    vecs = label_state_matrix(scheme, n)
    w = (1 << n) / vecs.shape[0]
    return [(w, v) for v in vecs]


def computational_elements(n: int) -> list[tuple[float, np.ndarray]]:
    return [(1.0, v.astype(complex)) for v in np.eye(1 << n)]


def povm_sum(povm: Iterable[tuple[float, np.ndarray]]) -> np.ndarray:
    items = list(povm)
    d = items[0][1].shape[0]
    out = np.zeros((d, d), dtype=complex)
    for w, v in items:
        out += w * np.outer(v, v.conj())
    return out


def frame_operator(povm: Iterable[tuple[float, np.ndarray]]) -> np.ndarray:
    """``F = sum_j |Pi_j>><<Pi_j| / tr(Pi_j)`` for ``Pi_j = w_j |v_j><v_j|``.

    Vectorisation is row-major, so ``|Pi>> = w (v kron conj(v))``.
    """
    items = list(povm)
    weights = np.array([w for w, _ in items], dtype=float)
    if np.any(weights <= 0):
        raise ValueError("POVM weights must be positive")
    vecs = np.array([v for _, v in items], dtype=complex)
    vecs = vecs / np.linalg.norm(vecs, axis=1, keepdims=True)
    flat = np.einsum("ri,rj->rij", vecs, vecs.conj()).reshape(len(items), -1)
    return (flat.T * weights) @ flat.conj()


def ic_check(frame: np.ndarray, tol: float = 1e-9) -> tuple[float, bool]:
    """Smallest eigenvalue of a Hermitian frame operator and invertibility."""
    evals = np.linalg.eigvalsh(frame)
    lo = float(evals[0])
    return lo, lo > tol
