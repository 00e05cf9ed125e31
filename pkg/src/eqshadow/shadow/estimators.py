"""Single-shot estimators, closed forms for special targets, and exact moments.

For a post-update label ``A`` and a computational-basis outcome ``p'`` the
estimators are

    eq:  2^n     <phi_A|O|phi_A> + <p'|O|p'> - tr(O)
    req: 2^{n-1} <phi_A|O|phi_A> + <p'|O|p'> - tr(O) / 2

and their expectation under the measurement law is ``tr(rho O)``.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from ..eqcore import EquatorialLabel, label_arrays, label_count, label_state_matrix
from ..qsim import GraphState
from .observables import Observable, ProjectorObservable, as_observable
from .sampling import label_scheme

MOM_CONSTANT = 68
TWO_COPY_FACTOR = 2
LABEL_SECOND_MOMENT = {"eq": 14, "req": 13}


def _factors(scheme: str, n: int) -> tuple[float, float]:
    """Weight of the label term and of ``tr(O)`` in the estimator."""
    if scheme == "eq":
        return float(2**n), 1.0
    return float(2 ** (n - 1)), 0.5


def _require_real(scheme: str, O: Observable) -> None:
    if scheme == "req" and not O.is_real:
        raise ValueError("real-equatorial measurements need a real observable")


def estimator_single(scheme: str, A: EquatorialLabel, p_prime, O) -> float:
    """Single-pair estimate of ``tr(rho O)``.

    Args:
        scheme: ``eq``/``espovm`` or ``req``/``respovm``.
        A: Post-update label from the equatorial measurement.
        p_prime: Outcome of the computational-basis measurement.
        O: :class:`Observable`, Hermitian matrix, or pure target state.
    """
    scheme = label_scheme(scheme)
    O = as_observable(O)
    if A.n != O.n or len(p_prime) != O.n:
        raise ValueError("label, outcome and observable sizes differ")
    if A.scheme != scheme:
        raise ValueError(f"label scheme {A.scheme!r} does not match {scheme!r}")
    _require_real(scheme, O)
    w, t = _factors(scheme, O.n)
    return w * O.label_expectation(A) + O.basis_expectation(p_prime) - t * O.trace


def estimator_batch(scheme: str, diag: np.ndarray, offdiag: np.ndarray, p_prime: np.ndarray, O) -> np.ndarray:
    """Vectorized :func:`estimator_single` over rows of label and outcome arrays."""
    scheme = label_scheme(scheme)
    O = as_observable(O)
    _require_real(scheme, O)
    w, t = _factors(scheme, O.n)
    return w * O.label_expectations(scheme, diag, offdiag) + O.basis_expectations(p_prime) - t * O.trace


# -- closed forms for special targets -------------------------------------------


def _require_req(A: EquatorialLabel) -> None:
    if A.scheme != "req":
        raise ValueError("closed-form estimators take real-equatorial labels")


def _ghz_basis_weight(p_prime) -> float:
    p_prime = np.asarray(p_prime)
    return 0.5 if (not p_prime.any()) or p_prime.all() else 0.0


def ghz_estimator(A: EquatorialLabel, p_prime, n: int | None = None) -> float:
    """RESPOVM estimate of the GHZ fidelity from a post-update label.

    The label term is ``{1 + (-1)^s}^2 / 4`` where ``s`` is the sum of all
    diagonal and upper off-diagonal entries of ``A``.
    """
    _require_req(A)
    if n is not None and n != A.n:
        raise ValueError("n does not match the label")
    s = int(A.diag.sum()) + int(A.offdiag.sum())
    label_term = 1.0 if s % 2 == 0 else 0.0
    return label_term + _ghz_basis_weight(p_prime) - 0.5


def ghz_estimator_split(A_prime: EquatorialLabel, p, p_prime) -> float:
    """GHZ estimate from the pre-update label ``A'`` and raw outcome ``p``."""
    _require_req(A_prime)
    s = int(A_prime.diag.sum()) + int(np.sum(p)) + int(A_prime.offdiag.sum())
    return 0.25 * (1 + (-1) ** s) ** 2 + _ghz_basis_weight(p_prime) - 0.5


def _w_basis_weight(p_prime, n: int) -> float:
    return 1.0 / n if int(np.sum(p_prime)) == 1 else 0.0


def w_estimator(A: EquatorialLabel, p_prime, n: int | None = None) -> float:
    """RESPOVM estimate of the W-state fidelity from a post-update label."""
    _require_req(A)
    n = A.n if n is None else n
    signs = np.where(A.diag % 2 == 0, 1, -1)
    return float(signs.sum()) ** 2 / (2 * n) + _w_basis_weight(p_prime, n) - 0.5


def w_estimator_split(A_prime: EquatorialLabel, p, p_prime) -> float:
    """W-state estimate from the pre-update label ``A'`` and raw outcome ``p``."""
    _require_req(A_prime)
    n = A_prime.n
    signs = (-1) ** ((A_prime.diag.astype(np.int64) + np.asarray(p, dtype=np.int64)) % 2)
    return float(signs.sum()) ** 2 / (2 * n) + _w_basis_weight(p_prime, n) - 0.5


def graph_estimator(A: EquatorialLabel, gamma, b=None) -> float:
    """RESPOVM graph-state fidelity estimate; the Z-basis term is its mean ``2^{-n}``."""
    _require_req(A)
    target = ProjectorObservable(GraphState(gamma, b))
    n = A.n
    return 2 ** (n - 1) * target.label_expectation(A) + 2.0**-n - 0.5


def bitflip_tolerance(components, xi) -> bool:
    """Whether every component string has even overlap with the flip string ``xi``."""
    comps = np.atleast_2d(np.asarray(components, dtype=np.int64))
    xi = np.asarray(xi, dtype=np.int64).reshape(-1)
    if comps.shape[1] != xi.shape[0]:
        raise ValueError("component and flip strings differ in length")
    return bool(np.all((comps @ xi) % 2 == 0))


# -- bounds --------------------------------------------------------------------


def variance_bound(O, scheme: str = "eq") -> float:
    """Upper bound on the per-pair variance: ``(c + 1) tr(O_0^2)``.

    ``c`` is 14 for eq and 13 for req (label part); the Z-basis part adds at
    most ``tr(O_0^2)``.
    """
    scheme = label_scheme(scheme)
    O = as_observable(O)
    return (LABEL_SECOND_MOMENT[scheme] + 1) * O.traceless_norm_sq


def copy_bound(O, eps: float, delta: float, M: int = 1, scheme: str = "eq") -> int:
    """Copies sufficient for accuracy ``eps`` with confidence ``1 - delta`` over ``M`` observables.

    Evaluates ``136 * Var * log(2M / delta) / eps^2`` with ``Var`` taken from
    :func:`variance_bound`.
    """
    if not 0 < eps < 1 or not 0 < delta < 1:
        raise ValueError("eps and delta must lie in (0, 1)")
    if M < 1:
        raise ValueError("M must be at least 1")
    var = variance_bound(O, scheme)
    return int(math.ceil(MOM_CONSTANT * TWO_COPY_FACTOR * var * math.log(2 * M / delta) / eps**2))


# -- exact enumeration -----------------------------------------------------------


def _density(rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim == 1:
        rho = np.outer(rho, rho.conj())
    return rho


def exact_label_law(scheme: str, rho) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All labels with their probabilities ``(2^n/|S|) <phi_A|rho|phi_A>``.

    Returns ``(diag, offdiag, prob)`` in :func:`label_arrays` order.
    """
    scheme = label_scheme(scheme)
    rho = _density(rho)
    n = rho.shape[0].bit_length() - 1
    states = label_state_matrix(scheme, n)
    weights = np.real(np.einsum("ai,ij,aj->a", states.conj(), rho, states))
    diag, off = label_arrays(scheme, n)
    return diag, off, 2**n / label_count(scheme, n) * weights


def _label_expectations_all(scheme: str, n: int, O: np.ndarray) -> np.ndarray:
    states = label_state_matrix(scheme, n)
    return np.real(np.einsum("ai,ij,aj->a", states.conj(), O, states))


def exact_estimator_moments(scheme: str, rho, O) -> tuple[float, float]:
    """Exact mean and variance of the pair estimator by full enumeration."""
    scheme = label_scheme(scheme)
    rho = _density(rho)
    O = np.asarray(as_observable(O).matrix())
    n = rho.shape[0].bit_length() - 1
    _, _, prob = exact_label_law(scheme, rho)
    w, t = _factors(scheme, n)
    label_part = w * _label_expectations_all(scheme, n, O)
    basis_prob = np.real(np.diag(rho))
    basis_part = np.real(np.diag(O))
    shift = t * float(np.real(np.trace(O)))
    mean = prob @ label_part + basis_prob @ basis_part - shift
    var = (prob @ label_part**2 - (prob @ label_part) ** 2) + (
        basis_prob @ basis_part**2 - (basis_prob @ basis_part) ** 2
    )
    return float(mean), float(var)


def exact_label_second_moment(scheme: str, rho, O) -> float:
    """``E[(O0_A)^2]`` for the label term applied to the traceless part of ``O``."""
    scheme = label_scheme(scheme)
    rho = _density(rho)
    O = np.asarray(as_observable(O).matrix())
    n = rho.shape[0].bit_length() - 1
    O0 = O - np.trace(O) * np.eye(1 << n) / 2**n
    _, _, prob = exact_label_law(scheme, rho)
    w, _ = _factors(scheme, n)
    return float(prob @ (w * _label_expectations_all(scheme, n, O0)) ** 2)


def exact_estimator_mean(scheme: str, rho, O) -> float:
    """``sum over (A, p')`` of probability times estimate."""
    return exact_estimator_moments(scheme, rho, O)[0]


def traceless_norm_sq(O) -> float:
    return as_observable(O).traceless_norm_sq


def pure_projector(vec: Sequence[complex] | np.ndarray) -> np.ndarray:
    v = np.asarray(vec, dtype=complex)
    return np.outer(v, v.conj())
