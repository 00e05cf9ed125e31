"""Experiment harness: JSON specs in, one CSV of result rows plus a manifest out.

Every experiment is cut into independent tasks keyed by ``(group, index)``.
Each task draws its randomness from a stream derived from the spec seed and
its key alone, and the rows are assembled in key order on one thread, so the
CSV bytes do not depend on the number of workers.  Wall times are recorded in
the manifest only.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from itertools import product
from pathlib import Path
from typing import Any, Callable, Iterator, NamedTuple, Sequence

import numpy as np

from . import __version__
from .eqcore import (
    SCHEMES,
    computational_elements,
    espovm_elements,
    frame_operator,
    ic_check,
    moment_closed_form,
    moment_exact,
    overlap_dense,
    povm_sum,
    sample_label_uniform,
)
from .qsim import (
    DenseState,
    GraphState,
    NoiseModel,
    PauliChannel,
    dense_cap,
    density_oracle,
    depolarizing_prep,
    gadgetize,
    ghz_state,
    outcome_distribution,
    random_state,
    w_state,
    x_prep,
    z_prep,
)
from .qsim.noise import DENSITY_CAP
from .shadow import (
    EstimationConfig,
    ProjectorObservable,
    exact_estimator_mean,
    exact_label_second_moment,
    run_protocol,
)
from .shadow.estimators import LABEL_SECOND_MOMENT, traceless_norm_sq
from .synth import (
    CzGraph,
    cz_layers_edge_coloring,
    depth_and_counts,
    depth_comparison_table,
    espovm_measurement_circuit,
    lnn_synthesize,
    lnn_unitary_error,
)

CSV_SCHEMA_VERSION = 1
CSV_COLUMNS = ("experiment", "row", "params", "estimate", "reference", "squared_error", "samples")
KINDS = ("fig2abc", "fig2de", "fig3", "fig5bc", "fig4b", "moments", "ic", "synth-verify")
BUDGET_SECONDS = 600.0
ORACLE_CAP = 3

_PREP = {"z": z_prep, "x": x_prep, "depolarizing": depolarizing_prep}
_ARMS = ("plain", "gadgetized", "clifford")
_TARGETS = ("ghz", "w")
_FIG2_CASES = (("espovm", "complex"), ("espovm", "real"), ("respovm", "real"))
# Asymptotic N * mean squared error: twice the average pair variance.
_FIG2_ASYMPTOTE = {"espovm": 2.0, "respovm": 1.0}


class BudgetError(RuntimeError):
    """A spec is expected to exceed the default wall-time budget without ``long``."""


# ---------------------------------------------------------------------------
# Random streams
# ---------------------------------------------------------------------------


class StreamDescriptor(NamedTuple):
    """Key of one independent random stream."""

    seed: int
    group: int
    index: int

    def sequence(self, *extra: int) -> np.random.SeedSequence:
        return np.random.SeedSequence(self.seed, spawn_key=(self.group, self.index, *extra))

    def generator(self, *extra: int) -> np.random.Generator:
        return np.random.default_rng(self.sequence(*extra))

    def integer(self, *extra: int) -> int:
        """A 128-bit integer seed for APIs that take plain integers."""
        words = self.sequence(*extra).generate_state(4, np.uint32)
        return int(sum(int(w) << (32 * k) for k, w in enumerate(words)))


@dataclass(frozen=True)
class SeedPartition:
    """The ``groups x per_group`` grid of streams below one seed, indexed row-major."""

    seed: int
    groups: int
    per_group: int

    def __len__(self) -> int:
        return self.groups * self.per_group

    def __getitem__(self, k: int) -> StreamDescriptor:
        if not 0 <= k < len(self):
            raise IndexError(k)
        return StreamDescriptor(self.seed, k // self.per_group, k % self.per_group)

    def __iter__(self) -> Iterator[StreamDescriptor]:
        for g in range(self.groups):
            for i in range(self.per_group):
                yield StreamDescriptor(self.seed, g, i)


def seed_partition(seed: int, groups: int, per_group: int) -> SeedPartition:
    """Stream descriptors for ``groups`` groups of ``per_group`` tasks each."""
    if groups < 1 or per_group < 1:
        raise ValueError("groups and per_group must be at least 1")
    if seed < 0:
        raise ValueError("seed must be nonnegative")
    return SeedPartition(int(seed), int(groups), int(per_group))


# ---------------------------------------------------------------------------
# Specs and rows
# ---------------------------------------------------------------------------


def _tuple(value, cast=None) -> tuple:
    if value is None:
        return ()
    if isinstance(value, (str, int, float)):
        value = (value,)
    return tuple(cast(v) if cast else v for v in value)


@dataclass(frozen=True)
class ExperimentSpec:
    """Configuration of one experiment.

    Attributes:
        kind: One of :data:`KINDS`.
        seed: Root seed (required).
        n: Qubit count where a single size applies.
        schemes: Measurement schemes (``espovm``/``respovm``).
        N: Copy budgets; one curve point each.
        K: Median-of-means groups.
        repetitions: Independent runs per point.
        eta_prep: Preparation error rate.
        prep_kinds: Preparation channels among ``z``, ``x``, ``depolarizing``.
        eta_gate: Long-range gate error rate (fig5bc).
        gate_kind: Long-range gate channel (fig5bc).
        targets: fig5bc targets among ``ghz`` and ``w``.
        arms: fig5bc arms among ``plain``, ``gadgetized``, ``clifford``.
        periodic: Treat qubits ``0`` and ``n-1`` as neighbours (fig5bc).
        dephasing_per_qubit: Apply the gadgetized dephasing rate per qubit
            rather than per gate (fig5bc).
        grid: Graph-state grid shape (fig3).
        cases: fig2abc ``(scheme, target kind)`` pairs.
        n_values: Sizes for table and oracle kinds.
        bias: Approximate-design bias (fig4b).
        labels: Random labels per size (fig4b, synth-verify).
        max_graph_n: Largest random graph for the edge-coloring check.
        name: File stem of the outputs; defaults to ``kind``.
        out: Output directory.
    """

    kind: str
    seed: int
    n: int | None = None
    schemes: tuple[str, ...] = ("espovm", "respovm")
    N: tuple[int, ...] = (2000,)
    K: int = 1
    repetitions: int = 1
    eta_prep: float = 0.0
    prep_kinds: tuple[str, ...] = ("z",)
    eta_gate: float = 0.0
    gate_kind: str = "depolarizing"
    targets: tuple[str, ...] = _TARGETS
    arms: tuple[str, ...] = _ARMS
    periodic: bool = True
    dephasing_per_qubit: bool = False
    grid: tuple[int, int] | None = None
    cases: tuple[tuple[str, str], ...] = _FIG2_CASES
    n_values: tuple[int, ...] = ()
    bias: float = 0.01
    labels: int = 50
    max_graph_n: int = 64
    name: str | None = None
    out: str = "results"

    def __post_init__(self) -> None:
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        set_("schemes", _tuple(self.schemes, str))
        set_("N", _tuple(self.N, int))
        set_("prep_kinds", _tuple(self.prep_kinds, str))
        set_("targets", _tuple(self.targets, str))
        set_("arms", _tuple(self.arms, str))
        set_("n_values", _tuple(self.n_values, int))
        set_("cases", tuple((str(a), str(b)) for a, b in self.cases))
        if self.grid is not None:
            set_("grid", tuple(int(v) for v in self.grid))
        self.validate()

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ExperimentSpec:
        if "seed" not in data or data["seed"] is None:
            raise ValueError("spec must set a seed")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown spec fields {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path: str | os.PathLike) -> ExperimentSpec:
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        for key, value in out.items():
            if isinstance(value, tuple):
                out[key] = [list(v) if isinstance(v, tuple) else v for v in value]
        return out

    @property
    def stem(self) -> str:
        return self.name or self.kind

    def _sizes(self, default: Sequence[int]) -> tuple[int, ...]:
        return self.n_values or tuple(default)

    def validate(self) -> None:
        """Check ranges and backend caps.

        Raises:
            ValueError: On an invalid field or a cap violation.
        """
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")
        if self.K < 1 or self.repetitions < 1:
            raise ValueError("K and repetitions must be positive")
        if any(v < 1 for v in self.N):
            raise ValueError("copy budgets must be positive")
        if not 0 <= self.eta_prep <= 1 or not 0 <= self.eta_gate <= 1:
            raise ValueError("error rates must lie in [0, 1]")
        for s in self.schemes:
            if s not in ("espovm", "respovm"):
                raise ValueError(f"unknown scheme {s!r}")
        for p in self.prep_kinds:
            if p not in _PREP:
                raise ValueError(f"unknown prep kind {p!r}")
        kind = self.kind
        if kind == "fig2abc":
            self._need_n(1, dense_cap(), "dense backend")
            for scheme, target in self.cases:
                if scheme not in _FIG2_ASYMPTOTE or target not in ("complex", "real"):
                    raise ValueError(f"bad case {(scheme, target)}")
                if scheme == "respovm" and target == "complex":
                    raise ValueError("RESPOVM cannot estimate complex targets")
        elif kind == "fig2de":
            self._need_n(2, None, "sparse backend")
            if set(self.prep_kinds) - {"z", "x"}:
                raise ValueError("fig2de supports z and x preparation noise")
        elif kind == "fig3":
            if self.grid is None or len(self.grid) != 2 or min(self.grid) < 1 or self.grid[0] * self.grid[1] < 2:
                raise ValueError("fig3 needs a grid with at least two vertices")
        elif kind == "fig5bc":
            self._need_n(2, dense_cap() if "clifford" in self.arms else None, "Clifford baseline")
            if set(self.arms) - set(_ARMS) or set(self.targets) - set(_TARGETS):
                raise ValueError("unknown arm or target")
            PauliChannel(self.gate_kind, self.eta_gate)
        elif kind == "fig4b":
            if any(n < 1 for n in self.n_values) or self.bias <= 0:
                raise ValueError("fig4b needs positive sizes and bias")
        elif kind in ("moments", "ic"):
            if any(not 1 <= n <= ORACLE_CAP for n in self._sizes((1, 2, 3))):
                raise ValueError(f"{kind} suite is capped at n <= {ORACLE_CAP}")
        elif kind == "synth-verify":
            if any(not 1 <= n <= dense_cap() for n in self._sizes((3, 8))):
                raise ValueError(f"synth-verify unitary checks are capped at n <= {dense_cap()}")
            if self.max_graph_n < 2:
                raise ValueError("max_graph_n must be at least 2")

    def _need_n(self, lo: int, hi: int | None, what: str) -> None:
        if self.n is None or self.n < lo:
            raise ValueError(f"{self.kind} needs n >= {lo}")
        if hi is not None and self.n > hi:
            raise ValueError(f"n = {self.n} exceeds the {what} cap of {hi}")


@dataclass(frozen=True)
class ResultRow:
    """One CSV row.  ``reference`` is ``None`` when no trusted value exists."""

    experiment: str
    params: dict[str, Any]
    estimate: float
    reference: float | None
    samples: int

    @property
    def squared_error(self) -> float | None:
        if self.reference is None:
            return None
        return (self.estimate - self.reference) ** 2

    def cells(self, row: int) -> list[str]:
        fmt = lambda v: "" if v is None else repr(float(v))  # noqa: E731
        return [
            self.experiment,
            str(row),
            json.dumps(self.params, sort_keys=True, separators=(",", ":")),
            fmt(self.estimate),
            fmt(self.reference),
            fmt(self.squared_error),
            str(int(self.samples)),
        ]


@dataclass
class RunResult:
    """Rows of a finished experiment and where they were written."""

    spec: ExperimentSpec
    rows: list[ResultRow]
    ok: bool
    manifest: dict[str, Any] = field(default_factory=dict)
    csv_path: Path | None = None
    manifest_path: Path | None = None


def rows_to_csv(rows: Sequence[ResultRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for k, row in enumerate(rows):
        writer.writerow(row.cells(k))
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Reference values
# ---------------------------------------------------------------------------


def ghz_prep_fidelity(n: int, prep_kind: str, eta: float) -> float:
    """Fidelity of a GHZ state with i.i.d. Z or X preparation errors.

    A Z string keeps the overlap iff its weight is even; an X string only iff
    it is empty or full.
    """
    if prep_kind == "z":
        return (1 + (1 - 2 * eta) ** n) / 2
    if prep_kind == "x":
        return (1 - eta) ** n + eta**n
    raise ValueError("GHZ closed forms exist for z and x noise only")


def _gf2_kernel(mat: np.ndarray) -> np.ndarray:
    """Rows spanning the right kernel of a 0/1 matrix over GF(2)."""
    m = mat.copy() % 2
    rows, cols = m.shape
    pivots = []
    r = 0
    for c in range(cols):
        hit = np.flatnonzero(m[r:, c])
        if r == rows or not hit.size:
            continue
        p = r + hit[0]
        m[[r, p]] = m[[p, r]]
        for k in np.flatnonzero(m[:, c]):
            if k != r:
                m[k] ^= m[r]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    free = [c for c in range(cols) if c not in pivots]
    basis = np.zeros((len(free), cols), dtype=np.uint8)
    for i, f in enumerate(free):
        basis[i, f] = 1
        for k, c in enumerate(pivots):
            basis[i, c] = m[k, f]
    return basis


def graph_prep_fidelity(gamma: np.ndarray, prep: Sequence[float], cap: int = 20) -> float | None:
    """Fidelity of a graph state after i.i.d. single-qubit Pauli errors.

    A Pauli with parts ``(x, z)`` maps ``|G>`` to ``Z^{z + Gamma x} |G>`` up to
    phase, so the overlap survives iff ``z = Gamma x``.  The sum runs over all
    ``x`` (or only the kernel of ``Gamma`` when Y and Z never occur).

    Returns:
        The fidelity, or ``None`` when the enumeration would exceed ``2^cap`` terms.
    """
    pI, pX, pY, pZ = (float(v) for v in prep)
    gamma = np.asarray(gamma, dtype=np.uint8)
    n = gamma.shape[0]
    if pX == 0 and pY == 0:
        return pI**n
    if pY == 0 and pZ == 0:
        xs = _gf2_kernel(gamma)
        if xs.shape[0] > cap:
            return None
        if xs.shape[0] == 0:
            return pI**n
        coeffs = np.array(list(product((0, 1), repeat=xs.shape[0])), dtype=np.int64)
        words = (coeffs @ xs) % 2
        w = words.sum(axis=1)
        return float(np.sum(pX**w * pI ** (n - w)))
    if n > cap:
        return None
    xs = np.array(list(product((0, 1), repeat=n)), dtype=np.int64)
    zs = (xs @ gamma) % 2
    # Per qubit: x=1 needs X (z=0) or Y (z=1); x=0 needs I (z=0) or Z (z=1).
    table = np.array([[pI, pZ], [pX, pY]])
    return float(np.prod(table[xs, zs], axis=1).sum())


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------


class _Task(NamedTuple):
    key: tuple[int, int]
    fn: Callable[[StreamDescriptor], dict]


def _protocol(scheme, n_copies, K, seed, state, targets, noise=None):
    config = EstimationConfig(scheme, int(n_copies), K=K, seed=seed, noise=noise)
    return run_protocol(config, state, targets)


def _even(n: int) -> int:
    return n + (n % 2)


def _fig2abc(spec: ExperimentSpec) -> tuple[list[_Task], Callable]:
    n = spec.n

    def make(case_idx: int, n_idx: int):
        scheme, target = spec.cases[case_idx]
        copies = _even(spec.N[n_idx])

        def fn(desc: StreamDescriptor) -> dict:
            setup = StreamDescriptor(desc.seed, case_idx, desc.index).generator(0)
            psi = random_state(n, setup)
            tau = random_state(n, setup, real=target == "real")
            ref = abs(np.vdot(tau.vector, psi.vector)) ** 2
            rep = _protocol(scheme, copies, spec.K, desc.integer(1, n_idx), psi, [ProjectorObservable(tau)])
            return dict(estimate=float(rep.estimates[0]), reference=float(ref), samples=copies)

        return fn

    tasks = [
        _Task((c * len(spec.N) + k, r), make(c, k))
        for c in range(len(spec.cases))
        for k in range(len(spec.N))
        for r in range(spec.repetitions)
    ]

    def collect(results: list[dict]) -> list[ResultRow]:
        rows, summary = [], []
        it = iter(results)
        for (scheme, target), copies in product(spec.cases, spec.N):
            batch = [next(it) for _ in range(spec.repetitions)]
            base = dict(n=n, scheme=scheme, target=target, N=_even(copies))
            for r, res in enumerate(batch):
                rows.append(ResultRow("fig2abc", dict(base, rep=r), res["estimate"], res["reference"], res["samples"]))
            mse = float(np.mean([(b["estimate"] - b["reference"]) ** 2 for b in batch]))
            summary.append(
                ResultRow(
                    "fig2abc/n_mse",
                    dict(base, repetitions=spec.repetitions),
                    _even(copies) * mse,
                    _FIG2_ASYMPTOTE[scheme],
                    _even(copies) * spec.repetitions,
                )
            )
        return rows + summary

    return tasks, collect


def _fig2de(spec: ExperimentSpec) -> tuple[list[_Task], Callable]:
    n = spec.n
    target = ghz_state(n)
    combos = list(product(spec.prep_kinds, spec.schemes, spec.N))
    references = {}
    for prep_kind in spec.prep_kinds:
        noise = NoiseModel(prep=_PREP[prep_kind](spec.eta_prep))
        if n <= DENSITY_CAP:
            ref = density_oracle(DenseState(target.to_dense()), noise, ProjectorObservable(target).matrix())
        else:
            ref = ghz_prep_fidelity(n, prep_kind, spec.eta_prep)
        references[prep_kind] = (noise, ref)

    def make(prep_kind, scheme, copies, group):
        noise, ref = references[prep_kind]

        def fn(desc: StreamDescriptor) -> dict:
            rep = _protocol(scheme, _even(copies), spec.K, desc.integer(), target, [ProjectorObservable(target)], noise)
            return dict(estimate=float(rep.estimates[0]), reference=ref, samples=_even(copies))

        return fn

    tasks = [
        _Task((g, r), make(*combo, g)) for g, combo in enumerate(combos) for r in range(spec.repetitions)
    ]

    def collect(results: list[dict]) -> list[ResultRow]:
        rows, summary = [], []
        for g, (prep_kind, scheme, copies) in enumerate(combos):
            batch = results[g * spec.repetitions : (g + 1) * spec.repetitions]
            base = dict(n=n, scheme=scheme, prep=prep_kind, eta_prep=spec.eta_prep, N=_even(copies))
            for r, res in enumerate(batch):
                rows.append(ResultRow("fig2de", dict(base, rep=r), res["estimate"], res["reference"], res["samples"]))
            mse = float(np.mean([(b["estimate"] - b["reference"]) ** 2 for b in batch]))
            summary.append(
                ResultRow("fig2de/mse", dict(base, repetitions=spec.repetitions), mse, None, _even(copies) * len(batch))
            )
        return rows + summary

    return tasks, collect


def _fig3(spec: ExperimentSpec) -> tuple[list[_Task], Callable]:
    rows_, cols_ = spec.grid
    graph = GraphState.grid(rows_, cols_)
    n = graph.n
    obs = ProjectorObservable(graph)
    combos = list(product(spec.prep_kinds, spec.schemes, spec.N))
    references = {}
    for prep_kind in spec.prep_kinds:
        noise = NoiseModel(prep=_PREP[prep_kind](spec.eta_prep))
        if n <= DENSITY_CAP:
            ref = density_oracle(DenseState(graph.to_dense()), noise, obs.matrix())
        else:
            ref = graph_prep_fidelity(graph.gamma, _PREP[prep_kind](spec.eta_prep))
        references[prep_kind] = (noise, ref)

    def make(prep_kind, scheme, copies):
        noise, ref = references[prep_kind]

        def fn(desc: StreamDescriptor) -> dict:
            rep = _protocol(scheme, copies, spec.K, desc.integer(), graph, [obs], noise)
            return dict(estimate=float(rep.estimates[0]), reference=ref, samples=copies)

        return fn

    tasks = [_Task((g, r), make(*combo)) for g, combo in enumerate(combos) for r in range(spec.repetitions)]

    def collect(results: list[dict]) -> list[ResultRow]:
        rows, summary = [], []
        for g, (prep_kind, scheme, copies) in enumerate(combos):
            batch = results[g * spec.repetitions : (g + 1) * spec.repetitions]
            base = dict(grid=list(spec.grid), scheme=scheme, prep=prep_kind, eta_prep=spec.eta_prep, N=copies)
            for r, res in enumerate(batch):
                rows.append(ResultRow("fig3", dict(base, rep=r), res["estimate"], res["reference"], res["samples"]))
            est = np.sort([b["estimate"] for b in batch])
            median = float(est[(est.size - 1) // 2])
            summary.append(
                ResultRow(
                    "fig3/median", dict(base, repetitions=spec.repetitions), median, batch[0]["reference"], copies * len(batch)
                )
            )
        return rows + summary

    return tasks, collect


def fig5_noise(
    eta: float, kind: str = "depolarizing", periodic: bool = True, arm: str = "plain", per_qubit: bool = False
) -> NoiseModel:
    """Noise on long-range two-qubit gates only, optionally gadgetized."""
    noise = NoiseModel(gate={"long_range": PauliChannel(kind, eta)}, periodic=periodic)
    return gadgetize(noise, per_qubit) if arm == "gadgetized" else noise


def _fig5bc(spec: ExperimentSpec) -> tuple[list[_Task], Callable]:
    n = spec.n
    states = {"ghz": ghz_state(n), "w": w_state(n)}
    combos = list(product(spec.targets, spec.arms, spec.N))

    def make(target, arm, copies):
        state = states[target]
        noise = fig5_noise(spec.eta_gate, spec.gate_kind, spec.periodic, arm, spec.dephasing_per_qubit)
        scheme = "clifford" if arm == "clifford" else "respovm"
        copies = copies if arm == "clifford" else _even(copies)

        def fn(desc: StreamDescriptor) -> dict:
            rep = _protocol(scheme, copies, spec.K, desc.integer(), state, [ProjectorObservable(state)], noise)
            return dict(estimate=float(rep.estimates[0]), reference=1.0, samples=copies, shots=rep.samples[:, 0])

        return fn

    tasks = [_Task((g, r), make(*combo)) for g, combo in enumerate(combos) for r in range(spec.repetitions)]

    def collect(results: list[dict]) -> list[ResultRow]:
        rows, summary = [], []
        for g, (target, arm, copies) in enumerate(combos):
            batch = results[g * spec.repetitions : (g + 1) * spec.repetitions]
            base = dict(n=n, target=target, arm=arm, eta_gate=spec.eta_gate, gate_kind=spec.gate_kind, N=batch[0]["samples"])
            for r, res in enumerate(batch):
                rows.append(ResultRow("fig5bc", dict(base, rep=r), res["estimate"], 1.0, res["samples"]))
            shots = np.concatenate([b["shots"] for b in batch])
            total = sum(b["samples"] for b in batch)
            stats = dict(mean=float(shots.mean()), stderr=float(shots.std(ddof=1) / math.sqrt(shots.size)))
            summary.append(ResultRow("fig5bc/mean", dict(base, repetitions=spec.repetitions), stats["mean"], 1.0, total))
            summary.append(ResultRow("fig5bc/stderr", dict(base, repetitions=spec.repetitions), stats["stderr"], None, total))
        return rows + summary

    return tasks, collect


def _fig4b(spec: ExperimentSpec) -> tuple[list[_Task], Callable]:
    sizes = spec._sizes(range(2, 21))

    def make(n):
        def fn(desc: StreamDescriptor) -> dict:
            rng = desc.generator()
            worst = dict(two_qubit_depth=0, nn_cnot_count=0)
            for _ in range(spec.labels):
                counts = depth_and_counts(lnn_synthesize(sample_label_uniform("eq", n, rng)))
                for key in worst:
                    worst[key] = max(worst[key], counts[key])
            return worst

        return fn

    tasks = [_Task((0, k), make(n)) for k, n in enumerate(sizes)]

    def collect(results: list[dict]) -> list[ResultRow]:
        rows = []
        for entry, measured in zip(depth_comparison_table(sizes, spec.bias), results):
            n = entry["n"]
            for curve in ("espovm_lnn", "clifford_lnn", "approx_design"):
                rows.append(ResultRow("fig4b", dict(n=n, curve=curve, bias=spec.bias), entry[curve], None, 0))
            for key, bound in (("two_qubit_depth", 2 * n + 2), ("nn_cnot_count", n * n)):
                params = dict(n=n, curve=f"measured_{key}", bound=bound, labels=spec.labels)
                rows.append(ResultRow("fig4b", params, measured[key], None, spec.labels))
        return rows

    return tasks, collect


# -- oracle suites -------------------------------------------------------------


def _check(name: str, params: dict, deviation: float, tol: float, reference: float = 0.0) -> ResultRow:
    return ResultRow(name, dict(params, tol=tol), float(deviation), reference, 0)


def _random_pair(n: int, rng: np.random.Generator, real: bool) -> tuple[np.ndarray, np.ndarray]:
    """A random mixed state and a random observable (real when ``real``)."""
    d = 1 << n
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = g @ g.conj().T
    rho /= np.trace(rho).real
    h = rng.normal(size=(d, d)) + (0 if real else 1j) * rng.normal(size=(d, d))
    return rho, (h + h.conj().T) / 2


def _moments(spec: ExperimentSpec) -> tuple[list[_Task], Callable]:
    sizes = spec._sizes((1, 2, 3))
    pairs = 10

    def make(n, scheme):
        def fn(desc: StreamDescriptor) -> dict:
            out = []
            for t in (1, 2, 3):
                exact = moment_exact(scheme, n, t)
                methods = ("kset", "combination") if t == 3 else ("kset",)
                dev = max(float(np.abs(exact - moment_closed_form(scheme, n, t, m)).max()) for m in methods)
                out.append(("moments/closed_form", dict(n=n, scheme=scheme, t=t), dev, 1e-12))
            rng = desc.generator()
            worst_bias, worst_ratio = 0.0, 0.0
            for _ in range(pairs):
                rho, O = _random_pair(n, rng, real=scheme == "req")
                worst_bias = max(worst_bias, abs(exact_estimator_mean(scheme, rho, O) - np.trace(rho @ O).real))
                O0 = traceless_norm_sq(O)
                worst_ratio = max(worst_ratio, exact_label_second_moment(scheme, rho, O) / O0 if O0 else 0.0)
            out.append(("moments/unbiased", dict(n=n, scheme=scheme, pairs=pairs), worst_bias, 1e-10))
            bound = LABEL_SECOND_MOMENT[scheme]
            out.append(("moments/second_moment_ratio", dict(n=n, scheme=scheme, pairs=pairs, bound=bound), worst_ratio, None))
            return dict(checks=out)

        return fn

    combos = list(product(sizes, SCHEMES))
    tasks = [_Task((0, k), make(*c)) for k, c in enumerate(combos)]

    def collect(results: list[dict]) -> list[ResultRow]:
        rows = []
        for res in results:
            for name, params, value, tol in res["checks"]:
                if tol is None:
                    rows.append(ResultRow(name, params, value, None, 0))
                else:
                    rows.append(_check(name, params, value, tol))
        return rows

    return tasks, collect


def _ic(spec: ExperimentSpec) -> tuple[list[_Task], Callable]:
    sizes = spec._sizes((1, 2, 3))

    def make(n):
        def fn(desc: StreamDescriptor) -> dict:
            d = 1 << n
            checks = []
            for scheme in SCHEMES:
                dev = float(np.abs(povm_sum(espovm_elements(scheme, n)) - np.eye(d)).max())
                checks.append(("ic/povm_sum", dict(n=n, scheme=scheme), dev, 0.0, 1e-12))
            only, _ = ic_check(frame_operator(espovm_elements("eq", n)))
            both, _ = ic_check(frame_operator(espovm_elements("eq", n) + computational_elements(n)))
            checks.append(("ic/espovm_min_eig", dict(n=n), only, 0.0, 1e-9))
            checks.append(("ic/combined_min_eig", dict(n=n), both, 1.0 / d, None))
            return dict(checks=checks)

        return fn

    tasks = [_Task((0, k), make(n)) for k, n in enumerate(sizes)]

    def collect(results: list[dict]) -> list[ResultRow]:
        rows = []
        for res in results:
            for name, params, value, ref, tol in res["checks"]:
                if tol is None:
                    rows.append(ResultRow(name, dict(params, lower_bound=ref - 1e-9), value, ref, 0))
                else:
                    rows.append(_check(name, params, value, tol, ref))
        return rows

    return tasks, collect


def circuit_law_tv(A, psi: np.ndarray, alternative: bool = False, lnn: bool = False) -> float:
    """Total variation between the simulated outcome law of the measurement
    circuit for ``A`` and the analytic law ``|<phi_{A.shifted(p)}|psi>|^2``."""
    n = A.n
    sim = outcome_distribution(espovm_measurement_circuit(A, alternative, lnn), DenseState(psi))
    ana = np.array([abs(overlap_dense(A.shifted(np.array(p, dtype=np.uint8)), psi)) ** 2 for p in product((0, 1), repeat=n)])
    return 0.5 * float(np.abs(sim.reshape(-1) - ana).sum())


def _synth_verify(spec: ExperimentSpec) -> tuple[list[_Task], Callable]:
    sizes = spec._sizes(range(3, 9))
    graph_sizes = sorted({k for k in (2, 4, 8, 16, 32, 64) if k < spec.max_graph_n} | {spec.max_graph_n})

    def lnn_task(n):
        def fn(desc: StreamDescriptor) -> dict:
            rng = desc.generator()
            err = depth = nn = 0.0
            for k in range(spec.labels):
                A = sample_label_uniform(SCHEMES[k % 2], n, rng)
                err = max(err, lnn_unitary_error(A))
                counts = depth_and_counts(lnn_synthesize(A))
                depth = max(depth, counts["two_qubit_depth"])
                nn = max(nn, counts["nn_cnot_count"])
            return dict(
                checks=[
                    ("synth/lnn_unitary", dict(n=n, labels=spec.labels), err, 0.0, 1e-10),
                    ("synth/lnn_depth_excess", dict(n=n, labels=spec.labels, max_depth=int(depth)), depth - (2 * n + 2), None, 0.0),
                    ("synth/lnn_nn_cnot_excess", dict(n=n, labels=spec.labels, max_nn=int(nn)), nn - n * n, None, 0.0),
                ]
            )

        return fn

    def law_task(n):
        def fn(desc: StreamDescriptor) -> dict:
            rng = desc.generator()
            worst = 0.0
            for k in range(10):
                scheme = SCHEMES[k % 2]
                A = sample_label_uniform(scheme, n, rng)
                psi = random_state(n, rng, real=False).vector
                for alternative, lnn in product((False, True), repeat=2):
                    worst = max(worst, circuit_law_tv(A, psi, alternative, lnn))
            return dict(checks=[("synth/circuit_law_tv", dict(n=n, labels=10), worst, 0.0, 1e-10)])

        return fn

    def coloring_task(n):
        def fn(desc: StreamDescriptor) -> dict:
            rng = desc.generator()
            excess = -math.inf
            for _ in range(5):
                iu = np.triu_indices(n, 1)
                keep = rng.random(iu[0].size) < rng.uniform(0.1, 1.0)
                g = CzGraph(n, tuple(zip(iu[0][keep].tolist(), iu[1][keep].tolist())))
                circuit = cz_layers_edge_coloring(g)
                used = sorted((min(q.qubits), max(q.qubits)) for layer in circuit.layers for q in layer)
                if used != sorted(g.edges):
                    raise AssertionError("edge coloring lost or duplicated an edge")
                for layer in circuit.layers:
                    touched = [q for gate_ in layer for q in gate_.qubits]
                    if len(touched) != len(set(touched)):
                        raise AssertionError("a CZ layer is not a matching")
                excess = max(excess, len(circuit.layers) - n)
            return dict(checks=[("synth/cz_layers_excess", dict(n=n, graphs=5), float(excess), None, 0.0)])

        return fn

    tasks = [_Task((0, k), lnn_task(n)) for k, n in enumerate(sizes)]
    tasks += [_Task((1, k), law_task(n)) for k, n in enumerate(range(1, min(4, dense_cap()) + 1))]
    tasks += [_Task((2, k), coloring_task(n)) for k, n in enumerate(graph_sizes)]

    def collect(results: list[dict]) -> list[ResultRow]:
        rows = []
        for res in results:
            for name, params, value, ref, tol in res["checks"]:
                if ref is None:
                    # Excess over a bound: pass when nonpositive.
                    rows.append(ResultRow(name, dict(params, tol=tol), value, None, 0))
                else:
                    rows.append(_check(name, params, value, tol, ref))
        return rows

    return tasks, collect


_BUILDERS = {
    "fig2abc": _fig2abc,
    "fig2de": _fig2de,
    "fig3": _fig3,
    "fig5bc": _fig5bc,
    "fig4b": _fig4b,
    "moments": _moments,
    "ic": _ic,
    "synth-verify": _synth_verify,
}


def row_passes(row: ResultRow) -> bool | None:
    """Pass/fail of an oracle-suite row, or ``None`` for informational rows."""
    tol = row.params.get("tol")
    if "lower_bound" in row.params:
        return row.estimate >= row.params["lower_bound"]
    if row.experiment == "moments/second_moment_ratio":
        return row.estimate <= row.params["bound"]
    if tol is None:
        return None
    if row.reference is None:
        return row.estimate <= tol
    return abs(row.estimate - row.reference) <= tol


# ---------------------------------------------------------------------------
# Cost model and driver
# ---------------------------------------------------------------------------


def _estimate_cost(spec: ExperimentSpec) -> float:
    """Rough single-thread wall time in seconds, used only for the budget gate."""
    kind = spec.kind
    reps, copies = spec.repetitions, sum(spec.N)
    if kind == "fig2abc":
        return len(spec.cases) * reps * copies * (2e-6 + 5e-7 * 2**spec.n) + reps * len(spec.cases) * 2e-3
    if kind == "fig2de":
        per = 1e-4 + 5e-6 * spec.n if spec.n > DENSITY_CAP else 1e-4
        return len(spec.prep_kinds) * len(spec.schemes) * reps * copies / 2 * per
    if kind == "fig3":
        n = spec.grid[0] * spec.grid[1]
        return len(spec.prep_kinds) * len(spec.schemes) * reps * copies * (5e-5 + 1.2e-4 * n)
    if kind == "fig5bc":
        n = spec.n
        per_arm = {"plain": (1e-4 + 2e-5 * n * n) / 2, "gadgetized": (1e-4 + 2e-5 * n * n) / 2, "clifford": 1e-3 + 1e-4 * n * n}
        return len(spec.targets) * reps * copies * sum(per_arm[a] for a in spec.arms)
    if kind == "fig4b":
        return spec.labels * sum(1e-4 * n * n for n in spec._sizes(range(2, 21)))
    return 30.0


def _versions() -> dict[str, str]:
    return {"eqshadow": __version__, "numpy": np.__version__, "python": platform.python_version()}


def run_experiment(
    spec: ExperimentSpec,
    workers: int = 1,
    out: str | os.PathLike | None = None,
    long: bool = False,
    write: bool = True,
) -> RunResult:
    """Run one experiment and write ``<stem>.csv`` and ``<stem>.json``.

    Args:
        spec: Validated experiment spec.
        workers: Threads for the task pool; outputs do not depend on it.
        out: Output directory overriding ``spec.out``.
        long: Allow specs whose estimated cost exceeds the default budget.
        write: Write the files; otherwise only return the rows.

    Raises:
        BudgetError: If the estimated cost exceeds the budget and ``long`` is false.
        OSError: If the output directory cannot be written.
    """
    if workers < 1:
        raise ValueError("workers must be at least 1")
    cost = _estimate_cost(spec)
    if cost > BUDGET_SECONDS and not long:
        raise BudgetError(f"estimated {cost:.0f} s exceeds the {BUDGET_SECONDS:.0f} s budget; pass --long to run it")
    tasks, collect = _BUILDERS[spec.kind](spec)
    groups = 1 + max(t.key[0] for t in tasks)
    per_group = 1 + max(t.key[1] for t in tasks)
    streams = seed_partition(spec.seed, groups, per_group)

    def work(task: _Task) -> tuple[dict, float]:
        start = time.perf_counter()
        res = task.fn(streams[task.key[0] * per_group + task.key[1]])
        return res, time.perf_counter() - start

    start = time.perf_counter()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            done = list(pool.map(work, tasks))
    else:
        done = [work(t) for t in tasks]
    rows = collect([res for res, _ in done])
    wall = time.perf_counter() - start
    verdicts = [row_passes(r) for r in rows]
    ok = all(v is not False for v in verdicts)
    text = rows_to_csv(rows)
    manifest = {
        "schema_version": CSV_SCHEMA_VERSION,
        "columns": list(CSV_COLUMNS),
        "spec": spec.to_dict(),
        "seed": spec.seed,
        "versions": _versions(),
        "rows": len(rows),
        "csv_sha256": hashlib.sha256(text.encode()).hexdigest(),
        "ok": ok,
        "failed_rows": [k for k, v in enumerate(verdicts) if v is False],
        "workers": workers,
        "estimated_cost_s": cost,
        "wall_time_s": wall,
        "task_wall_time_s": [{"key": list(t.key), "seconds": s} for t, (_, s) in zip(tasks, done)],
    }
    result = RunResult(spec, rows, ok, manifest)
    if write:
        directory = Path(out if out is not None else spec.out)
        directory.mkdir(parents=True, exist_ok=True)
        result.csv_path = directory / f"{spec.stem}.csv"
        result.manifest_path = directory / f"{spec.stem}.json"
        result.csv_path.write_text(text, encoding="utf-8")
        result.manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return result


def builtin_spec(kind: str, seed: int = 0) -> ExperimentSpec:
    """Default spec of an oracle suite (``moments``, ``ic`` or ``synth``)."""
    kinds = {"moments": "moments", "ic": "ic", "synth": "synth-verify"}
    if kind not in kinds:
        raise ValueError(f"unknown suite {kind!r}")
    return ExperimentSpec(kind=kinds[kind], seed=seed)
