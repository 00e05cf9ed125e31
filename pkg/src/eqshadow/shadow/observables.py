"""Observables as seen by the estimators.

An estimator only ever needs four numbers from an observable ``O``: its
trace, the squared Frobenius norm of its traceless part, the diagonal
elements ``<x|O|x>`` and the label expectations ``<phi_A|O|phi_A>``.  Dense
matrices provide them by brute force; pure-state projectors onto sparse or
graph targets provide them in polynomial time.
"""

from __future__ import annotations

import math

import numpy as np

from ..eqcore import (
    EquatorialLabel,
    _I_POWERS,
    bits_to_index,
    gauss_overlap_quadratic,
    overlap_dense,
    overlap_sparse,
    phase_exponents,
    basis_bits,
    state_vector,
)
from ..qsim import DenseState, GraphState, SparseState, StabilizerTableau

REALITY_TOL = 1e-12


class Observable:
    """Interface shared by :class:`DenseObservable` and :class:`ProjectorObservable`."""

    n: int

    @property
    def trace(self) -> float:
        raise NotImplementedError

    @property
    def traceless_norm_sq(self) -> float:
        """``tr(O_0^2)`` with ``O_0 = O - tr(O) I / 2^n``."""
        raise NotImplementedError

    @property
    def is_real(self) -> bool:
        raise NotImplementedError

    def label_expectation(self, A: EquatorialLabel) -> float:
        raise NotImplementedError

    def basis_expectation(self, bits) -> float:
        raise NotImplementedError

    def label_expectations(self, scheme: str, diag: np.ndarray, offdiag: np.ndarray) -> np.ndarray:
        """Vectorized :meth:`label_expectation` over rows of label arrays."""
        return np.array(
            [self.label_expectation(EquatorialLabel(scheme, self.n, d, o)) for d, o in zip(diag, offdiag)]
        )

    def basis_expectations(self, bits: np.ndarray) -> np.ndarray:
        return np.array([self.basis_expectation(row) for row in np.atleast_2d(bits)])

    def matrix(self) -> np.ndarray:
        raise NotImplementedError


class DenseObservable(Observable):
    """Hermitian matrix on ``n`` qubits."""

    def __init__(self, matrix: np.ndarray):
        mat = np.array(matrix, dtype=complex)
        dim = mat.shape[0]
        n = dim.bit_length() - 1
        if mat.shape != (dim, dim) or 1 << n != dim:
            raise ValueError("observable must be a 2^n x 2^n matrix")
        if not np.allclose(mat, mat.conj().T, atol=1e-10):
            raise ValueError("observable must be Hermitian")
        mat.flags.writeable = False
        self._mat = mat
        self.n = n

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self._mat)))

    @property
    def traceless_norm_sq(self) -> float:
        dim = 1 << self.n
        return float(np.real(np.trace(self._mat @ self._mat))) - self.trace**2 / dim

    @property
    def is_real(self) -> bool:
        return bool(np.abs(self._mat.imag).max(initial=0.0) <= REALITY_TOL)

    def matrix(self) -> np.ndarray:
        return self._mat

    def label_expectation(self, A: EquatorialLabel) -> float:
        v = state_vector(A)
        return float(np.real(np.vdot(v, self._mat @ v)))

    def label_expectations(self, scheme, diag, offdiag) -> np.ndarray:
        q = phase_exponents(scheme, diag, offdiag, basis_bits(self.n))
        vecs = _I_POWERS[q] / math.sqrt(2**self.n)
        return np.real(np.einsum("bi,ij,bj->b", vecs.conj(), self._mat, vecs))

    def basis_expectation(self, bits) -> float:
        k = int(bits_to_index(np.asarray(bits)))
        return float(np.real(self._mat[k, k]))

    def basis_expectations(self, bits) -> np.ndarray:
        idx = np.asarray(bits_to_index(np.atleast_2d(np.asarray(bits))))
        return np.real(np.diag(self._mat))[idx]


def _real_up_to_phase(coeffs: np.ndarray) -> bool:
    k = int(np.argmax(np.abs(coeffs)))
    rotated = coeffs * np.exp(-1j * np.angle(coeffs[k]))
    return bool(np.abs(rotated.imag).max(initial=0.0) <= REALITY_TOL)


class ProjectorObservable(Observable):
    """Projector ``|t><t|`` onto a pure target state.

    The target may be a :class:`DenseState`, a :class:`SparseState` or a
    :class:`GraphState`; label expectations use the dense overlap, the
    component sum or the Gauss-sum route respectively.
    """

    def __init__(self, target):
        if isinstance(target, np.ndarray):
            target = DenseState(target)
        if not isinstance(target, (DenseState, SparseState, GraphState)):
            raise TypeError(f"unsupported projector target {type(target).__name__}")
        self.target = target
        self.n = target.n
        if isinstance(target, SparseState):
            self._lookup = {row.tobytes(): complex(c) for row, c in zip(target.bits, target.coeffs)}

    @property
    def trace(self) -> float:
        return 1.0

    @property
    def traceless_norm_sq(self) -> float:
        return 1.0 - 2.0**-self.n

    @property
    def is_real(self) -> bool:
        t = self.target
        if isinstance(t, GraphState):
            return True
        coeffs = t.vector if isinstance(t, DenseState) else t.coeffs
        return _real_up_to_phase(coeffs)

    def vector(self) -> np.ndarray:
        t = self.target
        if isinstance(t, DenseState):
            return t.vector
        return t.to_dense()

    def matrix(self) -> np.ndarray:
        v = self.vector()
        return np.outer(v, v.conj())

    def overlap(self, A: EquatorialLabel) -> complex:
        """``<phi_A|t>``."""
        t = self.target
        if isinstance(t, DenseState):
            return overlap_dense(A, t.vector)
        if isinstance(t, SparseState):
            return overlap_sparse(A, t.bits, t.coeffs)
        return gauss_overlap_quadratic(A, t.gamma, t.b)

    def label_expectation(self, A: EquatorialLabel) -> float:
        return abs(self.overlap(A)) ** 2

    def label_expectations(self, scheme, diag, offdiag) -> np.ndarray:
        t = self.target
        if isinstance(t, GraphState):
            return super().label_expectations(scheme, diag, offdiag)
        if isinstance(t, DenseState):
            bits, coeffs = basis_bits(self.n), t.vector
        else:
            bits, coeffs = t.bits, t.coeffs
        q = phase_exponents(scheme, diag, offdiag, bits)
        amp = (_I_POWERS[q].conj() @ coeffs) / math.sqrt(2**self.n)
        return np.abs(amp) ** 2

    def basis_expectation(self, bits) -> float:
        t = self.target
        bits = np.asarray(bits, dtype=np.uint8)
        if isinstance(t, DenseState):
            return float(abs(t.vector[int(bits_to_index(bits))]) ** 2)
        if isinstance(t, SparseState):
            return abs(self._lookup.get(bits.tobytes(), 0.0)) ** 2
        return 2.0**-self.n

    def basis_expectations(self, bits) -> np.ndarray:
        bits = np.atleast_2d(np.asarray(bits, dtype=np.uint8))
        if isinstance(self.target, DenseState):
            return np.abs(self.target.vector[np.asarray(bits_to_index(bits))]) ** 2
        return super().basis_expectations(bits)


def as_observable(obj) -> Observable:
    """Wrap a matrix or a pure state as an observable; observables pass through."""
    if isinstance(obj, Observable):
        return obj
    if isinstance(obj, (DenseState, SparseState, GraphState)):
        return ProjectorObservable(obj)
    if isinstance(obj, StabilizerTableau):
        return ProjectorObservable(DenseState(obj.to_statevector()))
    return DenseObservable(np.asarray(obj))
