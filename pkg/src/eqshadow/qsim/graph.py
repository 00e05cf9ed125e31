"""Graph states ``Z^b |G>`` stored by adjacency matrix and sign vector."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..eqcore import graph_state_vector
from .tableau import StabilizerTableau


@dataclass(frozen=True)
class GraphState:
    """Graph state ``2^{-n/2} sum_x (-1)^{sum_{i<j} G_ij x_i x_j + b.x} |x>``.

    Attributes:
        gamma: Symmetric 0/1 adjacency matrix with zero diagonal.
        b: Sign vector; ``b_v = 1`` applies ``Z_v`` to the plain graph state.
    """

    gamma: np.ndarray = field(repr=False)
    b: np.ndarray = field(default=None, repr=False)

    def __post_init__(self) -> None:
        gamma = np.array(self.gamma, dtype=np.uint8)
        n = gamma.shape[0]
        if gamma.shape != (n, n) or not np.array_equal(gamma, gamma.T) or np.any(np.diag(gamma)):
            raise ValueError("adjacency must be square, symmetric and loop-free")
        b = np.zeros(n, dtype=np.uint8) if self.b is None else np.array(self.b, dtype=np.uint8).reshape(-1) & 1
        if b.shape != (n,):
            raise ValueError("sign vector length does not match the graph")
        gamma.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "b", b)

    @property
    def n(self) -> int:
        return self.gamma.shape[0]

    @classmethod
    def grid(cls, rows: int, cols: int) -> GraphState:
        """Nearest-neighbour grid graph, vertices numbered row-major."""
        n = rows * cols
        gamma = np.zeros((n, n), dtype=np.uint8)
        for r in range(rows):
            for c in range(cols):
                v = r * cols + c
                if c + 1 < cols:
                    gamma[v, v + 1] = gamma[v + 1, v] = 1
                if r + 1 < rows:
                    gamma[v, v + cols] = gamma[v + cols, v] = 1
        return cls(gamma)

    def to_dense(self) -> np.ndarray:
        return graph_state_vector(self.gamma, self.b)

    def to_tableau(self) -> StabilizerTableau:
        return StabilizerTableau.graph_state(self.gamma, self.b)

    def apply_paulis(self, paulis) -> GraphState:
        """State after a Pauli string (one of ``IXYZ`` per qubit), up to global phase.

        ``X_v`` acts on a graph state like ``Z`` on the neighbourhood of ``v``,
        so every Pauli error only moves the sign vector.
        """
        x = np.array([p in "XY" for p in paulis], dtype=np.int64)
        z = np.array([p in "ZY" for p in paulis], dtype=np.int64)
        if x.shape != (self.n,):
            raise ValueError("Pauli string length does not match the graph")
        shift = (z + self.gamma.astype(np.int64) @ x) % 2
        return GraphState(self.gamma, self.b ^ shift.astype(np.uint8))
