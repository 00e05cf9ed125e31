"""Stabilizer tableau with destabilizers (CHP-style bookkeeping).

Rows ``0..n-1`` are destabilizers and rows ``n..2n-1`` stabilizers.  Row
``r`` stands for the Pauli ``(-1)^{sign[r]} prod_j P_j`` where
``P_j = X^{x[r,j]} Z^{z[r,j]}`` up to the Hermitian convention
``X Z -> Y``.
"""

from __future__ import annotations

import numpy as np

from .circuit import Circuit, Gate

CLIFFORD_GATES = frozenset({"H", "S", "SDG", "Z", "X", "Y", "I", "CZ", "CNOT"})


def _g_phase(x1, z1, x2, z2) -> np.ndarray:
    """Exponent of ``i`` picked up when multiplying single-qubit Paulis."""
    x1 = x1.astype(np.int64)
    z1 = z1.astype(np.int64)
    x2 = x2.astype(np.int64)
    z2 = z2.astype(np.int64)
    return np.where(
        (x1 == 0) & (z1 == 0),
        0,
        np.where(
            (x1 == 1) & (z1 == 1),
            z2 - x2,
            np.where(x1 == 1, z2 * (2 * x2 - 1), x2 * (1 - 2 * z2)),
        ),
    )


class StabilizerTableau:
    """Stabilizer state on ``n`` qubits with destabilizer bookkeeping.

    Public operations return new tableaus; the ``_``-prefixed gate methods
    mutate in place and exist for inner loops.
    """

    __slots__ = ("n", "x", "z", "r")

    def __init__(self, x: np.ndarray, z: np.ndarray, r: np.ndarray):
        self.x = np.array(x, dtype=np.uint8)
        self.z = np.array(z, dtype=np.uint8)
        self.r = np.array(r, dtype=np.uint8).reshape(-1)
        self.n = self.x.shape[1]
        if self.x.shape != (2 * self.n, self.n) or self.z.shape != self.x.shape:
            raise ValueError("tableau blocks must be (2n, n)")
        if self.r.shape != (2 * self.n,):
            raise ValueError("sign vector must have length 2n")

    @classmethod
    def zero_state(cls, n: int) -> StabilizerTableau:
        """Tableau of ``|0^n>``: destabilizers ``X_i``, stabilizers ``Z_i``."""
        x = np.zeros((2 * n, n), dtype=np.uint8)
        z = np.zeros((2 * n, n), dtype=np.uint8)
        x[np.arange(n), np.arange(n)] = 1
        z[n + np.arange(n), np.arange(n)] = 1
        return cls(x, z, np.zeros(2 * n, dtype=np.uint8))

    @classmethod
    def graph_state(cls, gamma: np.ndarray, b=None) -> StabilizerTableau:
        """Graph state ``Z^b |G>`` with stabilizers ``(-1)^{b_v} X_v Z_{N(v)}``."""
        gamma = np.asarray(gamma, dtype=np.uint8)
        n = gamma.shape[0]
        x = np.zeros((2 * n, n), dtype=np.uint8)
        z = np.zeros((2 * n, n), dtype=np.uint8)
        z[np.arange(n), np.arange(n)] = 1
        x[n + np.arange(n), np.arange(n)] = 1
        z[n:] = gamma
        r = np.zeros(2 * n, dtype=np.uint8)
        if b is not None:
            r[n:] = np.asarray(b, dtype=np.uint8)
        return cls(x, z, r)

    def copy(self) -> StabilizerTableau:
        return StabilizerTableau(self.x, self.z, self.r)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StabilizerTableau):
            return NotImplemented
        return (
            np.array_equal(self.x, other.x)
            and np.array_equal(self.z, other.z)
            and np.array_equal(self.r, other.r)
        )

    def key(self) -> bytes:
        return self.x.tobytes() + self.z.tobytes() + self.r.tobytes()

    @property
    def stabilizers(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        n = self.n
        return self.x[n:], self.z[n:], self.r[n:]

    # -- validity -----------------------------------------------------------

    def symplectic_form(self) -> np.ndarray:
        """Pairwise commutation matrix of all ``2n`` rows (1 = anticommute)."""
        x = self.x.astype(np.int64)
        z = self.z.astype(np.int64)
        return (x @ z.T + z @ x.T) % 2

    def is_valid(self) -> bool:
        n = self.n
        omega = np.zeros((2 * n, 2 * n), dtype=np.int64)
        omega[:n, n:] = np.eye(n, dtype=np.int64)
        omega[n:, :n] = np.eye(n, dtype=np.int64)
        return bool(np.array_equal(self.symplectic_form(), omega))

    # -- in-place gates -----------------------------------------------------

    def _h(self, q: int) -> None:
        self.r ^= self.x[:, q] & self.z[:, q]
        self.x[:, q], self.z[:, q] = self.z[:, q].copy(), self.x[:, q].copy()

    def _s(self, q: int) -> None:
        self.r ^= self.x[:, q] & self.z[:, q]
        self.z[:, q] ^= self.x[:, q]

    def _sdg(self, q: int) -> None:
        self.r ^= self.x[:, q] & (self.z[:, q] ^ 1)
        self.z[:, q] ^= self.x[:, q]

    def _pauli(self, name: str, q: int) -> None:
        if name == "Z":
            self.r ^= self.x[:, q]
        elif name == "X":
            self.r ^= self.z[:, q]
        elif name == "Y":
            self.r ^= self.x[:, q] ^ self.z[:, q]

    def _cnot(self, c: int, t: int) -> None:
        xc, xt, zc, zt = self.x[:, c], self.x[:, t], self.z[:, c], self.z[:, t]
        self.r ^= xc & zt & (xt ^ zc ^ 1)
        self.x[:, t] ^= xc
        self.z[:, c] ^= zt

    def _cz(self, a: int, b: int) -> None:
        xa, xb, za, zb = self.x[:, a], self.x[:, b], self.z[:, a], self.z[:, b]
        self.r ^= xa & xb & (za ^ zb)
        self.z[:, a] ^= xb
        self.z[:, b] ^= xa

    def _apply(self, g: Gate) -> None:
        name = g.name
        if name == "H":
            self._h(g.qubits[0])
        elif name == "S":
            self._s(g.qubits[0])
        elif name == "SDG":
            self._sdg(g.qubits[0])
        elif name in ("X", "Y", "Z"):
            self._pauli(name, g.qubits[0])
        elif name == "CNOT":
            self._cnot(*g.qubits)
        elif name == "CZ":
            self._cz(*g.qubits)
        elif name != "I":
            raise ValueError(f"gate {name!r} is not Clifford")

    def _rowsum(self, targets: np.ndarray, source: int) -> None:
        """Multiply rows ``targets`` by row ``source`` in place."""
        if targets.size == 0:
            return
        phase = _g_phase(self.x[source][None, :], self.z[source][None, :], self.x[targets], self.z[targets]).sum(axis=1)
        total = 2 * self.r[targets].astype(np.int64) + 2 * int(self.r[source]) + phase
        self.r[targets] = (total % 4 == 2).astype(np.uint8)
        self.x[targets] ^= self.x[source]
        self.z[targets] ^= self.z[source]

    def _measure(self, q: int, rng: np.random.Generator) -> int:
        n = self.n
        hits = np.flatnonzero(self.x[n:, q]) + n
        if hits.size:
            p = int(hits[0])
            others = np.flatnonzero(self.x[:, q])
            others = others[others != p]
            self._rowsum(others, p)
            self.x[p - n], self.z[p - n], self.r[p - n] = self.x[p], self.z[p], self.r[p]
            outcome = int(rng.random() < 0.5)
            self.x[p] = 0
            self.z[p] = 0
            self.z[p, q] = 1
            self.r[p] = outcome
            return outcome
        # Deterministic outcome: multiply the stabilizers paired with the
        # destabilizers that anticommute with Z_q.
        rows = np.flatnonzero(self.x[:n, q]) + n
        sx = np.zeros(n, dtype=np.uint8)
        sz = np.zeros(n, dtype=np.uint8)
        phase = 0
        for row in rows:
            phase += 2 * int(self.r[row]) + int(_g_phase(self.x[row], self.z[row], sx, sz).sum())
            sx ^= self.x[row]
            sz ^= self.z[row]
        return int(phase % 4 == 2)

    # -- public API ---------------------------------------------------------

    def apply_gate(self, g: Gate) -> StabilizerTableau:
        out = self.copy()
        out._apply(g)
        return out

    def to_statevector(self) -> np.ndarray:
        """Dense vector of the stabilized state (global phase fixed arbitrarily)."""
        n = self.n
        if n > 12:
            raise ValueError("dense conversion capped at 12 qubits")
        dim = 1 << n
        idx = np.arange(dim)
        bits = (idx[:, None] >> np.arange(n - 1, -1, -1)) & 1
        sx, sz, sr = self.stabilizers

        def project(vec: np.ndarray) -> np.ndarray:
            for row in range(n):
                xr = sx[row].astype(np.int64)
                zr = sz[row].astype(np.int64)
                flip = int(bits_index(xr))
                # (X^x Z^z v)[k] = (-1)^{z.(k^x)} v[k^x], times i^{#Y} and the sign.
                src = idx ^ flip
                zsign = np.where((bits[src] @ zr) % 2 == 0, 1.0, -1.0)
                coeff = (1j ** int(np.sum(xr & zr))) * (-1.0) ** int(sr[row])
                vec = 0.5 * (vec + coeff * zsign * vec[src])
            return vec

        def bits_index(b):
            return int(b @ (1 << np.arange(n - 1, -1, -1)))

        for k in range(dim):
            start = np.zeros(dim, dtype=complex)
            start[k] = 1
            out = project(start)
            norm = np.linalg.norm(out)
            if norm > 1e-6:
                return out / norm
        raise RuntimeError("stabilizer projector vanished; invalid tableau")


def apply_clifford_tableau(circuit: Circuit, tab: StabilizerTableau) -> StabilizerTableau:
    """Conjugate all generators by the circuit's gates (measurement ignored)."""
    if circuit.n != tab.n:
        raise ValueError("circuit and tableau qubit counts differ")
    for _, _, g in circuit.gates():
        if g.name not in CLIFFORD_GATES:
            raise ValueError(f"gate {g.name!r} is not Clifford")
    out = tab.copy()
    for _, _, g in circuit.gates():
        out._apply(g)
    return out


def measure_tableau_z(tab: StabilizerTableau, rng: np.random.Generator) -> tuple[np.ndarray, StabilizerTableau]:
    """Measure every qubit in ascending order; returns bits and the collapsed state."""
    out = tab.copy()
    bits = np.array([out._measure(q, rng) for q in range(out.n)], dtype=np.uint8)
    return bits, out


def pauli_product(xs: np.ndarray, zs: np.ndarray, signs: np.ndarray) -> tuple[np.ndarray, np.ndarray, int]:
    """Multiply Pauli rows in order; returns ``(x, z, exponent of i)``.

    Each row contributes ``(-1)^{sign}`` and the Hermitian ``X^x Z^z``
    convention (``Y`` for ``x=z=1``); the returned exponent is relative to
    the same convention for the product.
    """
    n = xs.shape[1]
    px = np.zeros(n, dtype=np.uint8)
    pz = np.zeros(n, dtype=np.uint8)
    phase = 0
    for row in range(xs.shape[0]):
        phase += 2 * int(signs[row]) + int(_g_phase(xs[row], zs[row], px, pz).sum())
        px ^= xs[row]
        pz ^= zs[row]
    return px, pz, phase % 4


def _left_kernel_gf2(mat: np.ndarray) -> np.ndarray:
    """Basis (as rows) of ``{c : c @ mat = 0 mod 2}``."""
    rows, cols = mat.shape
    aug = np.concatenate([mat.astype(np.uint8) & 1, np.eye(rows, dtype=np.uint8)], axis=1)
    pivot_row = 0
    for col in range(cols):
        hits = np.flatnonzero(aug[pivot_row:, col]) + pivot_row
        if hits.size == 0:
            continue
        h = int(hits[0])
        if h != pivot_row:
            aug[[pivot_row, h]] = aug[[h, pivot_row]]
        others = np.flatnonzero(aug[:, col])
        others = others[others != pivot_row]
        aug[others] ^= aug[pivot_row]
        pivot_row += 1
        if pivot_row == rows:
            break
    return aug[pivot_row:, cols:]


def stabilizer_overlap_sq(tab1: StabilizerTableau, tab2: StabilizerTableau) -> float:
    """``|<psi_1|psi_2>|^2`` from the two stabilizer groups.

    The overlap vanishes if some Pauli lies in both groups with opposite
    signs; otherwise it equals ``2^{-(n-k)}`` where ``k`` is the dimension of
    the intersection of the unsigned groups.
    """
    if tab1.n != tab2.n:
        raise ValueError("tableaus act on different qubit counts")
    if not (tab1.is_valid() and tab2.is_valid()):
        raise ValueError("invalid tableau")
    n = tab1.n
    x1, z1, r1 = tab1.stabilizers
    x2, z2, r2 = tab2.stabilizers
    gens = np.concatenate([np.concatenate([x1, z1], axis=1), np.concatenate([x2, z2], axis=1)])
    kernel = _left_kernel_gf2(gens)
    for vec in kernel:
        a = vec[:n].astype(bool)
        b = vec[n:].astype(bool)
        _, _, ph1 = pauli_product(x1[a], z1[a], r1[a])
        _, _, ph2 = pauli_product(x2[b], z2[b], r2[b])
        if ph1 != ph2:
            return 0.0
    return 2.0 ** (kernel.shape[0] - n)
