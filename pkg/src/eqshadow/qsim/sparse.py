"""Few-component states and chain-rule sampling of parity functions.

A sparse state is ``psi = sum_j c_j |x_j>`` with ``L`` distinct components.
Measuring such a state after a diagonal phase layer and a Hadamard layer
produces amplitudes of the form

    f(p) = sum_j beta_j (-1)^{p . x_j},

and :func:`sample_parity_outcome` draws ``p`` with probability ``|f(p)|^2``
without ever touching all ``2^n`` outcomes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class SparseState:
    """Pure state with a short list of computational-basis components.

    Attributes:
        bits: ``(L, n)`` array of distinct bit strings.
        coeffs: Length-``L`` complex amplitudes with unit total weight.
    """

    bits: np.ndarray = field(repr=False)
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        bits = np.atleast_2d(np.array(self.bits, dtype=np.uint8))
        coeffs = np.array(self.coeffs, dtype=complex).reshape(-1)
        if bits.shape[0] != coeffs.shape[0]:
            raise ValueError("one coefficient per component is required")
        if np.any(bits > 1):
            raise ValueError("components must be bit strings")
        if len({row.tobytes() for row in bits}) != bits.shape[0]:
            raise ValueError("duplicate component bit strings")
        norm = math.sqrt(float(np.sum(np.abs(coeffs) ** 2)))
        if abs(norm - 1) > 1e-10:
            raise ValueError(f"state is not normalised (norm {norm})")
        bits.flags.writeable = False
        coeffs.flags.writeable = False
        object.__setattr__(self, "bits", bits)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def n(self) -> int:
        return self.bits.shape[1]

    @property
    def size(self) -> int:
        return self.bits.shape[0]

    def to_dense(self) -> np.ndarray:
        vec = np.zeros(1 << self.n, dtype=complex)
        weights = 1 << np.arange(self.n - 1, -1, -1)
        vec[self.bits.astype(np.int64) @ weights] = self.coeffs
        return vec

    def apply_pauli(self, x_part: np.ndarray, z_part: np.ndarray) -> SparseState:
        """Apply ``X^x Z^z`` (Z first) to the state."""
        x_part = np.asarray(x_part, dtype=np.uint8)
        z_part = np.asarray(z_part, dtype=np.int64)
        signs = np.where((self.bits.astype(np.int64) @ z_part) % 2 == 0, 1.0, -1.0)
        return SparseState(self.bits ^ x_part, self.coeffs * signs)


def ghz_state(n: int) -> SparseState:
    bits = np.zeros((2, n), dtype=np.uint8)
    bits[1] = 1
    return SparseState(bits, np.full(2, 1 / math.sqrt(2)))


def w_state(n: int) -> SparseState:
    return SparseState(np.eye(n, dtype=np.uint8), np.full(n, 1 / math.sqrt(n)))


def sample_sparse_z(state: SparseState, rng: np.random.Generator) -> np.ndarray:
    probs = np.abs(state.coeffs) ** 2
    j = int(np.searchsorted(np.cumsum(probs), rng.random() * probs.sum(), side="right"))
    return state.bits[min(j, state.size - 1)].copy()


def _last_one(diffs: np.ndarray) -> np.ndarray:
    """Index of the last set bit of each row, or -1 for all-zero rows."""
    n = diffs.shape[1]
    any_set = diffs.any(axis=1)
    last = n - 1 - np.argmax(diffs[:, ::-1], axis=1)
    return np.where(any_set, last, -1)


def parity_pair_tables(bits: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Pairwise XORs ``x_j ^ x_k`` (flattened over ``j,k``) and their last set bit."""
    bits = np.asarray(bits, dtype=np.uint8)
    diffs = (bits[:, None, :] ^ bits[None, :, :]).reshape(-1, bits.shape[1])
    return diffs, _last_one(diffs)


def sample_parity_outcome(
    beta: np.ndarray,
    bits: np.ndarray,
    rng: np.random.Generator,
    tables: tuple[np.ndarray, np.ndarray] | None = None,
) -> np.ndarray:
    """Draw ``p`` with probability ``|sum_j beta_j (-1)^{p.x_j}|^2``.

    The marginal of a prefix ``p_1..p_k`` is proportional to
    ``sum_{j,l} beta_j conj(beta_l) (-1)^{prefix . (x_j ^ x_l)}`` restricted to
    pairs whose XOR vanishes beyond the prefix.  Bit ``k`` is therefore
    uniform unless some pair's XOR has its last set bit exactly at ``k``;
    only those positions need work, giving ``O(n L^2)`` per draw at worst.

    Args:
        beta: Length-``L`` complex weights; the overall scale is irrelevant.
        bits: ``(L, n)`` distinct component strings.
        rng: Random generator.  All ``n`` bits are first drawn uniformly,
            then each event position is redrawn from its conditional law in
            ascending order.
        tables: Optional precomputed :func:`parity_pair_tables` output.
    """
    bits = np.asarray(bits, dtype=np.uint8)
    n = bits.shape[1]
    diffs, last = tables if tables is not None else parity_pair_tables(bits)
    weights = (beta[:, None] * beta.conj()[None, :]).reshape(-1)
    p = (rng.random(n) < 0.5).astype(np.uint8)
    events = np.unique(last[last >= 0])
    if events.size == 0:
        return p
    parity = np.zeros(diffs.shape[0], dtype=np.int64)
    done = 0
    for k in events:
        k = int(k)
        parity += diffs[:, done:k].astype(np.int64) @ p[done:k]
        done = k
        signs = np.where(parity % 2 == 0, 1.0, -1.0)
        settled = float(np.real(np.sum(weights[last < k] * signs[last < k])))
        fresh = float(np.real(np.sum(weights[last == k] * signs[last == k])))
        # Relative weights of p_k = 0 and p_k = 1 are settled + fresh and settled - fresh.
        prob_zero = 0.5 * (1 + fresh / settled) if settled > 0 else 0.5
        p[k] = rng.random() >= prob_zero
    return p


def parity_outcome_probabilities(beta: np.ndarray, bits: np.ndarray) -> np.ndarray:
    """All ``2^n`` probabilities ``|f(p)|^2`` by direct evaluation (oracle)."""
    bits = np.asarray(bits, dtype=np.int64)
    n = bits.shape[1]
    idx = np.arange(1 << n)
    ps = (idx[:, None] >> np.arange(n - 1, -1, -1)) & 1
    signs = np.where((ps @ bits.T) % 2 == 0, 1.0, -1.0)
    return np.abs(signs @ beta) ** 2


def parity_outcome_probabilities_chain(beta: np.ndarray, bits: np.ndarray) -> np.ndarray:
    """All ``2^n`` probabilities as products of the sampler's conditionals."""
    bits = np.asarray(bits, dtype=np.uint8)
    n = bits.shape[1]
    diffs, last = parity_pair_tables(bits)
    weights = (beta[:, None] * beta.conj()[None, :]).reshape(-1)
    out = np.zeros(1 << n)
    for idx in range(1 << n):
        p = ((idx >> np.arange(n - 1, -1, -1)) & 1).astype(np.int64)
        prob = 1.0
        for k in range(n):
            signs = np.where((diffs[:, :k].astype(np.int64) @ p[:k]) % 2 == 0, 1.0, -1.0)
            settled = float(np.real(np.sum(weights[last < k] * signs[last < k])))
            fresh = float(np.real(np.sum(weights[last == k] * signs[last == k])))
            if settled <= 0:
                prob = 0.0
                break
            pz = 0.5 * (1 + fresh / settled)
            prob *= pz if p[k] == 0 else 1 - pz
        out[idx] = prob
    return out
