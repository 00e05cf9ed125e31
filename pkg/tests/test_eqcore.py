from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import chi2

from eqshadow.eqcore import (
    EquatorialLabel,
    all_labels,
    amplitude,
    basis_bits,
    computational_elements,
    espovm_elements,
    frame_operator,
    gauss_overlap_quadratic,
    graph_state_vector,
    ic_check,
    k_set_contains,
    label_count,
    moment_closed_form,
    moment_exact,
    overlap_dense,
    overlap_sparse,
    povm_sum,
    quadratic_gauss_sum,
    quadratic_phase,
    sample_label_uniform,
    state_vector,
)


@st.composite
def labels(draw, scheme=None, max_n=5):
    scheme = scheme or draw(st.sampled_from(["eq", "req"]))
    n = draw(st.integers(1, max_n))
    mod = 4 if scheme == "eq" else 2
    diag = draw(st.lists(st.integers(0, mod - 1), min_size=n, max_size=n))
    off = draw(st.lists(st.integers(0, 1), min_size=n * (n - 1) // 2, max_size=n * (n - 1) // 2))
    return EquatorialLabel(scheme, n, diag, off)


def naive_phase(A: EquatorialLabel, x) -> int:
    """Double loop over the full symmetric matrix, written independently."""
    mat = A.matrix()
    if A.scheme == "eq":
        return int(sum(mat[i, j] * x[i] * x[j] for i in range(A.n) for j in range(A.n))) % 4
    lin = sum(int(mat[i, i]) * x[i] for i in range(A.n))
    quad = sum(int(mat[i, j]) * x[i] * x[j] for i in range(A.n) for j in range(i + 1, A.n))
    return 2 * ((lin + quad) % 2)


# -- label counting and sampling ----------------------------------------------


@pytest.mark.parametrize("scheme,n,count", [("eq", 1, 4), ("req", 2, 8), ("eq", 2, 32)])
def test_label_count_values(scheme, n, count):
    assert label_count(scheme, n) == count


@pytest.mark.parametrize("scheme", ["eq", "req"])
@pytest.mark.parametrize("n", [1, 2, 3])
def test_enumeration_matches_count_and_is_distinct(scheme, n):
    labels_ = list(all_labels(scheme, n))
    assert len(labels_) == label_count(scheme, n)
    assert len(set(labels_)) == len(labels_)


def test_label_count_is_exact_for_large_n():
    assert label_count("eq", 60) == 2 ** ((3600 + 180) // 2)


def test_label_count_rejects_zero_qubits():
    with pytest.raises(ValueError):
        label_count("eq", 0)


@pytest.mark.parametrize("scheme,cells", [("req", 2), ("eq", 4)])
def test_single_qubit_sampling_is_uniform(scheme, cells):
    rng = np.random.default_rng(5)
    draws = 100_000
    counts = np.zeros(cells)
    for _ in range(draws):
        counts[sample_label_uniform(scheme, 1, rng).diag[0]] += 1
    p = 1 / cells
    sigma = math.sqrt(draws * p * (1 - p))
    assert np.all(np.abs(counts - draws * p) < 5 * sigma)


def test_two_qubit_eq_sampling_chi_square():
    from eqshadow.eqcore import sample_label_arrays

    draws = 1_000_000
    diag, off = sample_label_arrays("eq", 2, draws, np.random.default_rng(11))
    cell = diag[:, 0] * 8 + diag[:, 1] * 2 + off[:, 0]
    counts = np.bincount(cell, minlength=32)
    expected = draws / 32
    stat = float(np.sum((counts - expected) ** 2 / expected))
    assert chi2.sf(stat, 31) > 1e-3


def test_sampling_is_deterministic_given_seed():
    a = sample_label_uniform("eq", 6, np.random.default_rng(3))
    b = sample_label_uniform("eq", 6, np.random.default_rng(3))
    assert a == b


# -- label validation and text form --------------------------------------------


@pytest.mark.parametrize(
    "scheme,diag,off",
    [("eq", [4, 0], [0]), ("req", [2, 0], [0]), ("eq", [0, 0], [2]), ("eq", [0], [0]), ("xx", [0, 0], [0])],
)
def test_invalid_labels_rejected(scheme, diag, off):
    with pytest.raises(ValueError):
        EquatorialLabel(scheme, 2, diag, off)


@given(labels())
def test_text_round_trip(A):
    assert EquatorialLabel.from_text(A.to_text()) == A


@given(labels())
def test_matrix_round_trip(A):
    assert EquatorialLabel.from_matrix(A.scheme, A.matrix()) == A


def test_text_form():
    A = EquatorialLabel("eq", 3, [1, 2, 3], [1, 0, 1])
    assert A.to_text() == "eq:3:123:101"


# -- phases and amplitudes -------------------------------------------------------


def test_quadratic_phase_examples():
    assert quadratic_phase(EquatorialLabel.zero("eq", 3), [1, 0, 1]) == 0
    assert quadratic_phase(EquatorialLabel("eq", 1, [1], []), [1]) == 1
    assert quadratic_phase(EquatorialLabel("req", 2, [0, 0], [1]), [1, 1]) == 2


def test_quadratic_phase_rejects_length_mismatch():
    with pytest.raises(ValueError):
        quadratic_phase(EquatorialLabel.zero("eq", 2), [1, 0, 1])


@given(labels(), st.data())
def test_quadratic_phase_matches_naive(A, data):
    x = data.draw(st.lists(st.integers(0, 1), min_size=A.n, max_size=A.n))
    assert quadratic_phase(A, x) == naive_phase(A, x)


@given(labels(scheme="req"), st.data())
def test_req_phases_are_real(A, data):
    x = data.draw(st.lists(st.integers(0, 1), min_size=A.n, max_size=A.n))
    assert quadratic_phase(A, x) % 2 == 0


def test_amplitude_examples():
    assert amplitude(EquatorialLabel.zero("eq", 3), [0, 0, 0]) == pytest.approx(2**-1.5)
    assert amplitude(EquatorialLabel("eq", 1, [3], []), [1]) == pytest.approx(-1j / math.sqrt(2))


@given(labels(), st.data())
def test_amplitude_modulus(A, data):
    x = data.draw(st.lists(st.integers(0, 1), min_size=A.n, max_size=A.n))
    assert abs(amplitude(A, x)) == pytest.approx(2 ** (-A.n / 2), abs=1e-15)


@given(labels(), st.data())
def test_shift_by_outcome(A, data):
    p = np.array(data.draw(st.lists(st.integers(0, 1), min_size=A.n, max_size=A.n)))
    step, mod = (2, 4) if A.scheme == "eq" else (1, 2)
    B = A.shifted(p)
    assert np.array_equal(B.diag, (A.diag + step * p) % mod)
    assert np.array_equal(B.offdiag, A.offdiag)
    # In state space the shift multiplies by (-1)^{p.x}.
    signs = np.where(basis_bits(A.n) @ p % 2 == 0, 1, -1)
    assert np.allclose(state_vector(B), state_vector(A) * signs)


# -- overlaps -----------------------------------------------------------------


def test_overlap_dense_examples():
    n = 3
    A = EquatorialLabel.zero("eq", n)
    assert overlap_dense(A, np.full(8, 1 / math.sqrt(8))) == pytest.approx(1)
    e0 = np.zeros(8)
    e0[0] = 1
    assert overlap_dense(A, e0) == pytest.approx(2**-1.5)


def test_overlap_dense_matches_naive_sum(rng):
    for _ in range(20):
        A = sample_label_uniform("eq", 3, rng)
        psi = rng.normal(size=8) + 1j * rng.normal(size=8)
        psi /= np.linalg.norm(psi)
        naive = 0j
        for idx, x in enumerate(itertools.product((0, 1), repeat=3)):
            naive += (1j ** naive_phase(A, x)).conjugate() * psi[idx]
        assert abs(overlap_dense(A, psi) - naive / math.sqrt(8)) < 1e-12


def test_overlap_sparse_examples():
    A = EquatorialLabel.zero("eq", 2)
    ghz = overlap_sparse(A, [[0, 0], [1, 1]], np.array([1, 1]) / math.sqrt(2))
    w = overlap_sparse(A, [[0, 1], [1, 0]], np.array([1, 1]) / math.sqrt(2))
    assert ghz == pytest.approx(1 / math.sqrt(2))
    assert w == pytest.approx(1 / math.sqrt(2))


def test_overlap_sparse_matches_densified(rng):
    n, L = 8, 8
    for scheme in ("eq", "req"):
        A = sample_label_uniform(scheme, n, rng)
        idx = rng.choice(1 << n, size=L, replace=False)
        bits = basis_bits(n)[idx]
        coeffs = rng.normal(size=L) + 1j * rng.normal(size=L)
        coeffs /= np.linalg.norm(coeffs)
        dense = np.zeros(1 << n, dtype=complex)
        dense[idx] = coeffs
        assert abs(overlap_sparse(A, bits, coeffs) - overlap_dense(A, dense)) < 1e-12


def test_overlap_sparse_rejects_duplicates():
    with pytest.raises(ValueError):
        overlap_sparse(EquatorialLabel.zero("eq", 2), [[0, 1], [0, 1]], [0.6, 0.8])


# -- Gauss sums ---------------------------------------------------------------


def brute_gauss(linear, cross) -> complex:
    n = len(linear)
    total = 0j
    for x in itertools.product((0, 1), repeat=n):
        x = np.array(x)
        q = int(linear @ x) + 2 * int(sum(cross[i, j] * x[i] * x[j] for i in range(n) for j in range(i + 1, n)))
        total += 1j ** (q % 4)
    return total


def random_graph(n: int, rng: np.random.Generator) -> np.ndarray:
    upper = np.triu(rng.integers(0, 2, size=(n, n)), 1)
    return upper + upper.T


def test_gauss_sum_matches_brute_force(rng):
    for _ in range(200):
        n = int(rng.integers(1, 9))
        linear = rng.integers(0, 4, size=n)
        cross = random_graph(n, rng)
        assert abs(quadratic_gauss_sum(linear, cross) - brute_gauss(linear, cross)) < 1e-9


def test_gauss_overlap_examples():
    rng = np.random.default_rng(2)
    gamma = random_graph(5, rng)
    A = EquatorialLabel.from_matrix("eq", gamma)
    assert gauss_overlap_quadratic(A, gamma) == pytest.approx(1)
    assert abs(gauss_overlap_quadratic(EquatorialLabel.zero("eq", 5), np.zeros((5, 5)), [0, 1, 0, 0, 1])) < 1e-15


def test_gauss_overlap_matches_dense_up_to_ten_qubits(rng):
    for n in range(1, 11):
        for _ in range(4):
            A = sample_label_uniform(["eq", "req"][n % 2], n, rng)
            gamma = random_graph(n, rng)
            b = rng.integers(0, 2, size=n)
            ref = np.vdot(state_vector(A), graph_state_vector(gamma, b))
            assert abs(gauss_overlap_quadratic(A, gamma, b) - ref) < 1e-10


def test_gauss_overlap_rejects_asymmetric_graph():
    with pytest.raises(ValueError):
        gauss_overlap_quadratic(EquatorialLabel.zero("eq", 2), np.array([[0, 1], [0, 0]]))


# -- K sets --------------------------------------------------------------------


def test_k_set_examples():
    inside = [(1, 1), (0, 0), (0, 0), (1, 1), (0, 0), (0, 0)]
    assert k_set_contains("K1", inside) and k_set_contains("K2", inside)
    split = [(1, 1), (0, 1), (0, 1), (1, 1), (1, 0), (1, 0)]
    assert k_set_contains("K1", split) and not k_set_contains("K2", split)


@given(st.lists(st.integers(0, 1), min_size=2, max_size=2))
def test_all_equal_tuple_in_both_sets(x):
    assert k_set_contains("K1", [x] * 6) and k_set_contains("K2", [x] * 6)


@given(st.lists(st.lists(st.integers(0, 1), min_size=2, max_size=2), min_size=6, max_size=6))
def test_k2_implies_k1(v):
    if k_set_contains("K2", v):
        assert k_set_contains("K1", v)


def test_k_set_rejects_ragged_tuple():
    with pytest.raises(ValueError):
        k_set_contains("K1", [(0,), (0,), (0,), (0,), (0,), (0, 1)])


# -- moments -------------------------------------------------------------------


def test_first_moment_examples():
    assert np.allclose(moment_exact("eq", 1, 1), np.eye(2) / 2)
    assert np.allclose(moment_exact("req", 2, 1), np.eye(4) / 4)
    assert np.allclose(moment_closed_form("req", 3, 1), np.eye(8) / 8)


def test_second_moment_single_qubit_eq():
    swap = np.zeros((4, 4))
    for a, b in itertools.product(range(2), repeat=2):
        swap[2 * a + b, 2 * b + a] = 1
    proj = np.diag([1.0, 0, 0, 1])
    expected = (np.eye(4) + swap - proj) / 4
    assert np.abs(moment_closed_form("eq", 1, 2) - expected).max() < 1e-15


@pytest.mark.parametrize("scheme", ["eq", "req"])
@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("t", [1, 2, 3])
def test_moments_match_enumeration(scheme, n, t):
    exact = moment_exact(scheme, n, t)
    assert np.abs(exact - moment_closed_form(scheme, n, t)).max() < 1e-12


@pytest.mark.parametrize("scheme", ["eq", "req"])
@pytest.mark.parametrize("n", [1, 2, 3])
def test_third_moment_constructions_agree(scheme, n):
    a = moment_closed_form(scheme, n, 3, "kset")
    b = moment_closed_form(scheme, n, 3, "combination")
    assert np.abs(a - b).max() < 1e-12


def test_moment_rejects_bad_order():
    with pytest.raises(ValueError):
        moment_closed_form("eq", 1, 4)


# -- POVMs and frames ----------------------------------------------------------


@pytest.mark.parametrize("scheme", ["eq", "req"])
@pytest.mark.parametrize("n", [1, 2, 3])
def test_povm_completeness(scheme, n):
    assert np.abs(povm_sum(espovm_elements(scheme, n)) - np.eye(1 << n)).max() < 1e-12


def test_single_qubit_frames():
    only, ic_only = ic_check(frame_operator(espovm_elements("eq", 1)))
    assert abs(only) < 1e-9 and not ic_only
    frame = frame_operator(espovm_elements("eq", 1) + computational_elements(1))
    assert np.allclose(np.sort(np.linalg.eigvalsh(frame)), [0.5, 0.5, 1, 2])
    comp = frame_operator(computational_elements(1))
    assert np.linalg.matrix_rank(comp) == 2


@pytest.mark.parametrize("n", [1, 2, 3])
def test_frame_operator_ic_bounds(n):
    only, _ = ic_check(frame_operator(espovm_elements("eq", n)))
    both, ok = ic_check(frame_operator(espovm_elements("eq", n) + computational_elements(n)))
    assert only < 1e-9
    assert ok and both >= 2.0**-n - 1e-9


def test_frame_operator_rejects_nonpositive_weight():
    with pytest.raises(ValueError):
        frame_operator([(0.0, np.array([1, 0], dtype=complex))])
