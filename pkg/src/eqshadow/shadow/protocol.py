"""The full estimation protocol with median-of-means aggregation.

Copies are split into ``K`` groups of ``N' = N / K``.  For (R)ESPOVM every
pair of copies yields one estimate (one equatorial and one Z-basis
measurement), so a group holds ``N'/2`` estimates; the Clifford baseline uses
one copy per estimate.  Graph-state projectors have a constant Z-basis term,
so for them the second copy is skipped and every copy yields an estimate.
Work is cut into fixed-size blocks, each with its own
random stream keyed by ``(seed, group, block)``, so results do not depend on
how many worker threads run the blocks.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..qsim import DenseState, GraphState, NoiseModel, SparseState
from ..qsim.sparse import parity_pair_tables
from ..streams import stream_rng
from .clifford import clifford_baseline_draw, clifford_estimate
from .estimators import copy_bound, estimator_batch, estimator_single, variance_bound
from .observables import Observable, ProjectorObservable, as_observable
from .sampling import sample_computational_batch, sample_espovm_batch, sample_noisy_pair

SCHEMES = ("espovm", "respovm", "clifford")
DEFAULT_BLOCK = 250


@dataclass(frozen=True)
class EstimationConfig:
    """Protocol parameters.

    Attributes:
        scheme: ``espovm``, ``respovm`` or ``clifford``.
        N: Total number of input-state copies, ``N = N' K``.
        K: Number of median-of-means groups.
        seed: Root seed of all random streams.
        noise: Optional noise model.
        lnn: Compile equatorial measurement circuits for a line (noise placement only).
        block: Estimates per random stream.
        eps: Accuracy used for the reported copy bound.
        delta: Failure probability used for the reported copy bound.
    """

    scheme: str
    N: int
    K: int = 1
    seed: int = 0
    noise: NoiseModel | None = None
    lnn: bool = False
    block: int = DEFAULT_BLOCK
    eps: float = 0.1
    delta: float = 0.05

    def __post_init__(self) -> None:
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if self.K < 1:
            raise ValueError("K must be at least 1")
        if self.N < 1 or self.N % self.K:
            raise ValueError("N must be a positive multiple of K")
        if self.block < 1:
            raise ValueError("block must be positive")

    @property
    def per_group(self) -> int:
        """``N'``: copies per group."""
        return self.N // self.K

    def estimates_per_group(self, single_copy: bool = False) -> int:
        """Estimates per group; paired schemes halve the copies unless ``single_copy``."""
        return self.per_group if self.scheme == "clifford" or single_copy else self.per_group // 2


@dataclass
class EstimateReport:
    """Outcome of :func:`run_protocol` for ``M`` observables.

    Attributes:
        estimates: ``(M,)`` medians of the group means (lower median for even ``K``).
        group_means: ``(K, M)`` per-group means.
        samples: ``(K * per_group_estimates, M)`` single-shot estimates, group-major.
        empirical_variance: ``(M,)`` sample variance of the single-shot estimates.
        variance_bound: ``(M,)`` theoretical per-estimate bound (``nan`` for Clifford).
        copy_bound: Per-observable copy bound (``None`` for Clifford).
        copies: Total copies consumed.
    """

    estimates: np.ndarray
    group_means: np.ndarray
    samples: np.ndarray = field(repr=False)
    empirical_variance: np.ndarray
    variance_bound: np.ndarray
    copy_bound: list[int | None]
    copies: int

    @property
    def standard_error(self) -> np.ndarray:
        """Standard error of the plain mean over all single-shot estimates."""
        return np.sqrt(self.empirical_variance / self.samples.shape[0])


def median_of_means(group_means: Sequence[float] | np.ndarray) -> float:
    """Median of group means; even counts take the lower median."""
    vals = np.sort(np.asarray(group_means, dtype=float))
    if vals.size == 0:
        raise ValueError("no group means")
    return float(vals[(vals.size - 1) // 2])


def _graph_targets_only(observables: list[Observable]) -> bool:
    return all(isinstance(o, ProjectorObservable) and isinstance(o.target, GraphState) for o in observables)


def _run_block(config: EstimationConfig, state, observables: list[Observable], size: int, rng, tables, single_copy):
    scheme = config.scheme
    noise = config.noise
    out = np.zeros((size, len(observables)))
    if scheme == "clifford":
        for k in range(size):
            U, p = clifford_baseline_draw(state, rng, noise)
            out[k] = [clifford_estimate(U, p, O) for O in observables]
        return out
    clean = noise is None or noise.is_noiseless()
    if clean and isinstance(state, DenseState):
        diag, off, _ = sample_espovm_batch(state, scheme, size, rng)
        p_prime = sample_computational_batch(state, size, rng)
        for j, O in enumerate(observables):
            out[:, j] = estimator_batch(scheme, diag, off, p_prime, O)
        return out
    for k in range(size):
        A, p_prime = sample_noisy_pair(state, scheme, rng, noise, config.lnn, tables, with_basis=not single_copy)
        out[k] = [estimator_single(scheme, A, p_prime, O) for O in observables]
    return out


def run_protocol(
    config: EstimationConfig,
    state,
    observables: Sequence,
    workers: int = 1,
) -> EstimateReport:
    """Estimate ``tr(rho O)`` for every observable with median of means.

    Args:
        config: Protocol parameters.
        state: Input state on any backend.
        observables: Observables, matrices or pure target states.
        workers: Number of threads; results are identical for any value.

    Raises:
        ValueError: If a RESPOVM run is given a complex observable.
    """
    obs = [as_observable(o) for o in observables]
    if any(o.n != state.n for o in obs):
        raise ValueError("observable sizes do not match the state")
    if config.scheme == "respovm":
        bad = [i for i, o in enumerate(obs) if not o.is_real]
        if bad:
            raise ValueError(f"observables {bad} are not real; RESPOVM cannot estimate them")
    single_copy = config.scheme != "clifford" and _graph_targets_only(obs)
    if config.scheme != "clifford" and not single_copy and config.per_group % 2:
        raise ValueError("copies per group must be even for paired measurements")
    tables = parity_pair_tables(state.bits) if isinstance(state, SparseState) else None
    if config.scheme == "clifford" and isinstance(state, SparseState):
        state = DenseState(state.to_dense())
    per_group = config.estimates_per_group(single_copy)
    tasks = []
    for g in range(config.K):
        for b in range(math.ceil(per_group / config.block)):
            size = min(config.block, per_group - b * config.block)
            tasks.append((g, b, size))

    def work(task):
        g, b, size = task
        return _run_block(config, state, obs, size, stream_rng(config.seed, g, b), tables, single_copy)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(work, tasks))
    else:
        blocks = [work(t) for t in tasks]
    samples = np.concatenate(blocks, axis=0)
    group_means = samples.reshape(config.K, per_group, len(obs)).mean(axis=1)
    estimates = np.array([median_of_means(group_means[:, j]) for j in range(len(obs))])
    if config.scheme == "clifford":
        vb = np.full(len(obs), np.nan)
        cb: list[int | None] = [None] * len(obs)
    else:
        vb = np.array([variance_bound(o, config.scheme) for o in obs])
        cb = [copy_bound(o, config.eps, config.delta, len(obs), config.scheme) for o in obs]
    var = samples.var(axis=0, ddof=1) if samples.shape[0] > 1 else np.zeros(len(obs))
    return EstimateReport(estimates, group_means, samples, var, vb, cb, config.N)
