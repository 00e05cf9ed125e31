from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from eqshadow.eqcore import (
    EquatorialLabel,
    basis_bits,
    overlap_dense,
    sample_label_uniform,
)
from eqshadow.qsim import DenseState, apply_circuit, circuit_unitary, outcome_distribution, random_state
from eqshadow.synth import (
    CzGraph,
    PatternPair,
    cz_layers_edge_coloring,
    decompose_cz_phase,
    depth_and_counts,
    depth_comparison_table,
    espovm_measurement_circuit,
    lnn_cnot_sequence,
    lnn_interval_schedule,
    lnn_layers,
    lnn_patterns,
    lnn_synthesize,
    lnn_track,
    lnn_unitary_error,
    misra_gries_coloring,
    reversal_permutation,
    round_robin_matchings,
)


def random_graph(n: int, density: float, rng: np.random.Generator) -> CzGraph:
    return CzGraph(n, tuple((i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < density))


def assert_valid_layers(circuit, edges=None):
    for layer in circuit.layers:
        support = [q for g in layer for q in g.qubits]
        assert len(support) == len(set(support))
    if edges is not None:
        scheduled = sorted(tuple(sorted(g.qubits)) for layer in circuit.layers for g in layer)
        assert scheduled == sorted(edges)


# -- measurement circuits --------------------------------------------------------


def test_zero_label_circuit_is_hadamards_then_measure():
    c = espovm_measurement_circuit(EquatorialLabel.from_text("eq:3:000:000"))
    assert [g.name for layer in c.layers for g in layer] == ["H"] * 3
    assert c.measure == ("Z", "Z", "Z")
    assert depth_and_counts(c)["cz_count"] == 0


def test_req_alternative_measures_x_only():
    rng = np.random.default_rng(0)
    for n in range(1, 7):
        A = sample_label_uniform("req", n, rng)
        c = espovm_measurement_circuit(A, alternative=True)
        assert set(c.measure) == {"X"}
        assert all(g.name == "CZ" for layer in c.layers for g in layer)


def test_diagonal_two_emits_z():
    c = espovm_measurement_circuit(EquatorialLabel.from_text("eq:2:20:0"))
    names = {(g.name, g.qubits) for layer in c.layers for g in layer}
    assert ("Z", (0,)) in names
    assert not any(name in ("S", "SDG") for name, _ in names)


def test_phase_gate_order_follows_diagonal():
    c = espovm_measurement_circuit(EquatorialLabel.from_text("eq:4:1230:000000"))
    phase = {g.qubits[0]: g.name for layer in c.layers for g in layer if g.name != "H"}
    assert phase == {0: "SDG", 1: "Z", 2: "S"}
    c = espovm_measurement_circuit(EquatorialLabel.from_text("req:2:10:1"))
    assert ("Z", (0,)) in {(g.name, g.qubits) for layer in c.layers for g in layer}


def simulated_vs_analytic(A, psi, **flags):
    sim = outcome_distribution(espovm_measurement_circuit(A, **flags), DenseState(psi)).reshape(-1)
    ana = np.array([abs(overlap_dense(A.shifted(p.astype(np.uint8)), psi)) ** 2 for p in basis_bits(A.n)])
    return 0.5 * float(np.abs(sim - ana).sum())


@pytest.mark.parametrize("alternative", [False, True])
@pytest.mark.parametrize("lnn", [False, True])
def test_circuit_outcome_law(alternative, lnn):
    rng = np.random.default_rng(1)
    for n in range(1, 5):
        for scheme in ("eq", "req"):
            for _ in range(6):
                A = sample_label_uniform(scheme, n, rng)
                psi = random_state(n, rng).vector
                assert simulated_vs_analytic(A, psi, alternative=alternative, lnn=lnn) < 1e-10


# -- edge coloring ---------------------------------------------------------------


def test_empty_graph_has_no_layers():
    assert cz_layers_edge_coloring(CzGraph(5, ())).layers == ()


def test_k5_needs_five_layers():
    c = cz_layers_edge_coloring(CzGraph.complete(5))
    assert len(c.layers) == 5
    assert_valid_layers(c, CzGraph.complete(5).edges)
    # No four matchings can cover K5: a matching has at most two of its ten edges.
    assert max(len(layer) for layer in c.layers) == 2


def test_complete_graph_layer_counts():
    for n in range(2, 12):
        c = cz_layers_edge_coloring(CzGraph.complete(n))
        assert len(c.layers) == (n if n % 2 else n - 1)
        assert_valid_layers(c, CzGraph.complete(n).edges)
        assert sum(len(m) for m in round_robin_matchings(n)) == n * (n - 1) // 2


def test_cz_graph_validation():
    with pytest.raises(ValueError):
        CzGraph(3, ((1, 1),))
    with pytest.raises(IndexError):
        CzGraph(3, ((0, 3),))
    assert CzGraph(3, ((2, 0), (0, 2))).edges == ((0, 2),)


def test_random_graph_coloring_up_to_64():
    rng = np.random.default_rng(2)
    for n in (2, 3, 5, 8, 13, 21, 34, 64):
        for density in (0.1, 0.5, 0.9):
            g = random_graph(n, density, rng)
            c = cz_layers_edge_coloring(g)
            assert len(c.layers) <= max(g.max_degree() + 1, 0) <= n
            assert_valid_layers(c, g.edges)


@given(st.integers(2, 14), st.data())
def test_misra_gries_is_proper(n, data):
    edges = data.draw(st.sets(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)).filter(lambda e: e[0] < e[1])))
    coloring = misra_gries_coloring(n, edges)
    assert set(coloring) == set(edges)
    for a, b in itertools.combinations(coloring, 2):
        if set(a) & set(b):
            assert coloring[a] != coloring[b]
    g = CzGraph(n, tuple(edges))
    assert len(set(coloring.values())) <= g.max_degree() + 1


def test_label_graph_layers_match_offdiag():
    rng = np.random.default_rng(3)
    for n in range(2, 10):
        A = sample_label_uniform("eq", n, rng)
        g = CzGraph.from_label(A)
        c = espovm_measurement_circuit(A)
        scheduled = sorted(g2.qubits for layer in c.layers for g2 in layer if g2.name == "CZ")
        assert scheduled == list(g.edges)


# -- nearest-neighbour patterns --------------------------------------------------


def test_patterns_at_five():
    assert lnn_patterns(5) == PatternPair((4, 2, 2, 1, 1, 3, 3), (3, 3, 5, 5, 4, 4, 2))


@pytest.mark.parametrize("n", [3, 5, 7, 9, 11])
def test_pattern_lengths_and_tracking(n):
    pj, pk = lnn_patterns(n)
    assert len(pj) == len(pk) == 2 * n - 3
    hist = lnn_track(n)
    for t in range(1, (n - 1) // 2 + 1):
        for i in range(1, n + 1):
            ends = (pj[n - 3 - 2 * (t - 1) + i - 1], pk[2 * (t - 1) + i - 1])
            assert hist[4 * t][i - 1] == (min(ends), max(ends))


def test_pattern_errors():
    with pytest.raises(ValueError):
        lnn_patterns(1)
    with pytest.raises(ValueError):
        lnn_patterns(4)
    with pytest.raises(ValueError):
        lnn_layers(1)


def test_three_applications_reverse_five_qubits():
    n = 5
    state = np.eye(n, dtype=np.uint8)
    for layer in lnn_cnot_sequence(n)[:12]:
        for g in layer:
            c, t = g.qubits
            state[t] ^= state[c]
    assert np.array_equal(state, np.eye(n, dtype=np.uint8)[::-1])


def test_five_qubit_intervals_each_appear_once_at_whole_applications():
    hist = lnn_track(5)
    seen = [iv for t in range(3) for iv in hist[4 * t]]
    assert None not in seen
    assert len(seen) == len(set(seen)) == 15


@pytest.mark.parametrize("n", range(2, 17))
def test_skeleton_reverses_and_covers_intervals(n):
    skeleton = lnn_synthesize(EquatorialLabel.from_text(f"eq:{n}:{'0' * n}:{'0' * (n * (n - 1) // 2)}"))
    assert depth_and_counts(skeleton)["two_qubit_depth"] <= 2 * n + 2
    assert len(lnn_interval_schedule(n)) == n * (n + 1) // 2
    state = np.eye(n, dtype=np.uint8)
    for layer in skeleton.layers:
        for g in layer:
            c, t = g.qubits
            state[t] ^= state[c]
    assert np.array_equal(state, np.eye(n, dtype=np.uint8)[::-1])
    for layer in skeleton.layers:
        assert all(g.name == "CNOT" and abs(g.qubits[0] - g.qubits[1]) == 1 for g in layer)


# -- phase decomposition ---------------------------------------------------------


def prefix_phase(terms, x):
    y = np.concatenate([[0], np.cumsum(x) % 2])
    total = 0
    for spec, u in terms:
        v = y[spec[0]] if len(spec) == 1 else y[spec[0]] ^ y[spec[1]]
        total += u * int(v)
    return total % 4


@pytest.mark.parametrize("n", range(2, 9))
def test_decompose_cz_phase_exhaustive(n):
    xs = basis_bits(n)
    for mu, nu in itertools.combinations(range(1, n + 1), 2):
        terms = decompose_cz_phase(mu, nu, n)
        assert len(terms) <= 12
        for spec, u in terms:
            assert 1 <= len(spec) <= 2 and u in (1, 2, 3)
            assert all(1 <= a <= n for a in spec)
        for x in xs:
            assert prefix_phase(terms, x) == 2 * int(x[mu - 1] & x[nu - 1])


def test_adjacent_pair_uses_local_prefixes():
    for nu in range(2, 9):
        terms = decompose_cz_phase(nu - 1, nu, 8)
        assert {a for spec, _ in terms for a in spec} <= {nu - 2, nu - 1, nu} - {0}


def test_two_qubit_cz_diagonal():
    terms = decompose_cz_phase(1, 2, 2)
    diag = [1j ** prefix_phase(terms, np.array(x)) for x in itertools.product((0, 1), repeat=2)]
    assert np.allclose(diag, [1, 1, 1, -1])


def test_decompose_cz_phase_rejects_bad_indices():
    for mu, nu, n in ((0, 1, 2), (2, 2, 3), (1, 4, 3), (3, 1, 4)):
        with pytest.raises(ValueError):
            decompose_cz_phase(mu, nu, n)


# -- nearest-neighbour synthesis ---------------------------------------------------


def test_zero_label_is_reversal():
    for n in range(2, 7):
        A = EquatorialLabel.from_text(f"eq:{n}:{'0' * n}:{'0' * (n * (n - 1) // 2)}")
        assert np.allclose(circuit_unitary(lnn_synthesize(A)), reversal_permutation(n))


@pytest.mark.parametrize("n", range(3, 9))
def test_lnn_unitary_depth_and_gate_set(n):
    rng = np.random.default_rng(100 + n)
    for k in range(50):
        A = sample_label_uniform(("eq", "req")[k % 2], n, rng)
        assert lnn_unitary_error(A) < 1e-10
        c = lnn_synthesize(A)
        counts = depth_and_counts(c)
        assert counts["two_qubit_depth"] <= 2 * n + 2
        assert counts["cnot_count"] == counts["nn_cnot_count"] <= n * n
        assert counts["cz_count"] == 0
        assert {g.name for layer in c.layers for g in layer} <= {"CNOT", "S", "Z", "SDG"}
        assert c.reverse_outcome


def test_lnn_unitary_at_five_direct():
    rng = np.random.default_rng(4)
    A = sample_label_uniform("eq", 5, rng)
    u = circuit_unitary(lnn_synthesize(A))
    diag = reversal_permutation(5).T @ u
    assert np.abs(diag - np.diag(np.diag(diag))).max() < 1e-10
    x = basis_bits(5).astype(np.int64)
    q = (x @ A.diag.astype(np.int64)) % 4
    iu, ju = np.triu_indices(5, 1)
    q = (q + 2 * (x[:, iu] * x[:, ju]) @ A.offdiag.astype(np.int64)) % 4
    ratio = np.diag(diag) / 1j ** q
    assert np.abs(ratio - ratio[0]).max() < 1e-10


def test_lnn_single_qubit():
    A = EquatorialLabel.from_text("eq:1:3:")
    assert np.allclose(circuit_unitary(lnn_synthesize(A)), np.diag([1, -1j]))


# -- resource counts -------------------------------------------------------------


def test_counts_for_zero_label():
    c = espovm_measurement_circuit(EquatorialLabel.from_text("eq:4:0000:000000"))
    counts = depth_and_counts(c)
    assert counts["cz_count"] == 0 and counts["depth"] == 2
    assert counts["single_qubit_count"] == 4


def test_average_cz_count_at_eight():
    rng = np.random.default_rng(5)
    samples = 10_000
    counts = np.array([int(sample_label_uniform("eq", 8, rng).offdiag.sum()) for _ in range(samples)])
    circuits = [depth_and_counts(espovm_measurement_circuit(sample_label_uniform("eq", 8, rng)))["cz_count"] for _ in range(500)]
    sigma = math.sqrt(28 * 0.25 / samples)
    assert abs(counts.mean() - 14) < 5 * sigma
    assert abs(np.mean(circuits) - 14) < 5 * math.sqrt(28 * 0.25 / 500)


def test_nn_cnot_count_bound_at_six():
    rng = np.random.default_rng(6)
    for _ in range(100):
        c = espovm_measurement_circuit(sample_label_uniform("eq", 6, rng), lnn=True)
        assert depth_and_counts(c)["nn_cnot_count"] <= 36


def test_depth_comparison_table():
    (row,) = depth_comparison_table([10], 0.01)
    assert row["approx_design"] == pytest.approx(182.1, abs=0.05)
    assert row["espovm_lnn"] == 20 and row["clifford_lnn"] == 30
    assert all(r["espovm_lnn"] < r["clifford_lnn"] for r in depth_comparison_table(range(1, 200), 0.1))
    for bias in (0, -1.0):
        with pytest.raises(ValueError):
            depth_comparison_table([3], bias)


@given(st.integers(1, 6), st.sampled_from(["eq", "req"]), st.booleans(), st.booleans(), st.integers(0, 2**32 - 1))
def test_emitted_layers_are_disjoint(n, scheme, alternative, lnn, seed):
    A = sample_label_uniform(scheme, n, seed)
    c = espovm_measurement_circuit(A, alternative=alternative, lnn=lnn)
    assert_valid_layers(c)
    psi = random_state(n, seed).vector
    out = apply_circuit(c, DenseState(psi)).vector
    assert abs(np.linalg.norm(out) - 1) < 1e-10
