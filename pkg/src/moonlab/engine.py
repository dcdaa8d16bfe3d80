"""System time to failure and the chunked Monte Carlo simulation engine.

An M-out-of-N system fails at the (N-M+1)-th component failure, so its
lifetime is the (N-M+1)-th smallest entry of the component lifetime vector.
Batches are simulated in fixed-size chunks; chunk c always owns stream_id c,
which makes every sample value a pure function of (seed, sample index) no
matter how many workers run or how the scheduler interleaves them.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import estimators
from .dependency import DependencyConfig, DependencyModel, draw_ttf_matrix
from .streams import DistributionSpec, make_stream

CHUNK_SIZE = 1 << 16
DEFAULT_SAMPLE_CAP = 100_000_000  # ~800 MB of float64 values

DEFAULT_SAMPLES = 10**6          # interactive default
REPRODUCTION_SAMPLES = 10**7     # per-cell count used for full reproduction runs
DEFAULT_GRID_POINTS = 20


class SampleCapError(MemoryError):
    """Requested batch would exceed the in-memory materialization cap."""

    def __init__(self, requested: int, cap: int):
        self.requested = requested
        self.cap = cap
        super().__init__(
            f"nb={requested} exceeds the materialization cap of {cap} samples; "
            "raise sample_cap or use simulate_stats() for streaming statistics"
        )


@dataclass(frozen=True)
class ArchitectureSpec:
    """M-out-of-N redundancy: operational while at least M of N components work."""

    n_components: int
    m_required: int

    def __post_init__(self) -> None:
        n, m = self.n_components, self.m_required
        if not (isinstance(n, (int, np.integer)) and n >= 1):
            raise ValueError(f"n_components must be an integer >= 1, got {n}")
        if not (isinstance(m, (int, np.integer)) and 1 <= m <= n):
            raise ValueError(f"m_required must satisfy 1 <= M <= N, got M={m}, N={n}")

    def __str__(self) -> str:
        return f"{self.m_required}oo{self.n_components}"


@dataclass(frozen=True)
class ScenarioConfig:
    """One simulation cell: architecture, dependency, lifetimes, size, seed."""

    arch: ArchitectureSpec
    dep: DependencyConfig
    dist: DistributionSpec = DistributionSpec()
    nb: int = DEFAULT_SAMPLES
    seed: int = 0

    def __post_init__(self) -> None:
        if not (isinstance(self.nb, (int, np.integer)) and self.nb >= 1):
            raise ValueError(f"nb must be an integer >= 1, got {self.nb}")


@dataclass
class TTFSample:
    """Simulated system times to failure for one scenario cell."""

    values: np.ndarray
    scenario: ScenarioConfig

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.scenario.nb,):
            raise ValueError(
                f"expected {self.scenario.nb} values, got shape {self.values.shape}"
            )


@dataclass(frozen=True)
class SweepConfig:
    """A scenario swept over a dependency-parameter grid."""

    arch: ArchitectureSpec
    model: DependencyModel
    dist: DistributionSpec = DistributionSpec()
    nb: int = DEFAULT_SAMPLES
    seed: int = 0
    p_grid: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "model", DependencyModel(self.model))
        grid = tuple(float(p) for p in self.p_grid)
        if not grid:
            grid = tuple(default_p_grid())
        if any(not 0.0 <= p <= 1.0 for p in grid):
            raise ValueError("p_grid values must lie in [0, 1]")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("p_grid must be strictly increasing")
        object.__setattr__(self, "p_grid", grid)
        if not (isinstance(self.nb, (int, np.integer)) and self.nb >= 1):
            raise ValueError(f"nb must be an integer >= 1, got {self.nb}")

    def cell(self, p: float) -> ScenarioConfig:
        return ScenarioConfig(
            arch=self.arch,
            dep=DependencyConfig(model=self.model, p=p),
            dist=self.dist,
            nb=self.nb,
            seed=self.seed,
        )


@dataclass
class SweepEntry:
    p: float
    stats: "estimators.SummaryStats"


@dataclass
class SweepResult:
    """Per-p statistics plus curves relative to the independent (p=0) baseline."""

    config: SweepConfig
    entries: list[SweepEntry]
    baseline: "estimators.SummaryStats"
    relative: "estimators.RelativeCurves" = field(init=False)

    def __post_init__(self) -> None:
        self.relative = estimators.relative_stats(self)


def default_p_grid(count: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    """`count` equally spaced dependency parameters from 0 to 1 inclusive."""
    if count < 2:
        raise ValueError(f"grid needs at least 2 points, got {count}")
    return np.linspace(0.0, 1.0, count)


def resolve_workers(workers: int | None = None) -> int:
    """Worker count: explicit argument, else MOONLAB_THREADS, else auto (0)."""
    if workers is None:
        raw = os.environ.get("MOONLAB_THREADS", "").strip()
        workers = int(raw) if raw else 0
    workers = int(workers)
    if workers < 0:
        raise ValueError(f"worker count must be >= 0, got {workers}")
    if workers == 0:
        workers = os.cpu_count() or 1
    return workers


def system_ttf(y: Sequence[float], arch: ArchitectureSpec) -> float:
    """System lifetime: the (N-M+1)-th smallest component lifetime.

    M=1 gives the maximum (parallel system), M=N the minimum (series).
    """
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (arch.n_components,):
        raise ValueError(
            f"expected {arch.n_components} component lifetimes, got shape {y.shape}"
        )
    k = arch.n_components - arch.m_required
    return float(np.partition(y, k)[k])


def _system_ttf_batch(y: np.ndarray, arch: ArchitectureSpec) -> np.ndarray:
    if y.shape[1] != arch.n_components:
        raise ValueError(
            f"expected {arch.n_components} columns, got {y.shape[1]}"
        )
    n, m = arch.n_components, arch.m_required
    if n == 3:
        # selection network: exact and much faster than a row sort
        a, b, c = y[:, 0], y[:, 1], y[:, 2]
        if m == 3:
            return np.minimum(np.minimum(a, b), c)
        if m == 1:
            return np.maximum(np.maximum(a, b), c)
        return np.maximum(np.minimum(a, b), np.minimum(np.maximum(a, b), c))
    k = n - m
    return np.partition(y, k, axis=1)[:, k]


def _simulate_chunk(cfg: ScenarioConfig, stream_id: int, count: int) -> np.ndarray:
    stream = make_stream(cfg.seed, stream_id)
    y = draw_ttf_matrix(cfg.dep, cfg.dist, cfg.arch.n_components, count, stream)
    return _system_ttf_batch(y, cfg.arch)


def simulate_batch(
    cfg: ScenarioConfig,
    *,
    workers: int | None = None,
    sample_cap: int = DEFAULT_SAMPLE_CAP,
) -> TTFSample:
    """Simulate cfg.nb system lifetimes.

    Sample i lives in chunk i // CHUNK_SIZE, which draws from stream_id equal
    to the chunk index, so the output is bit-identical for any worker count.
    """
    if cfg.nb > sample_cap:
        raise SampleCapError(cfg.nb, sample_cap)
    workers = resolve_workers(workers)
    nb = cfg.nb
    n_chunks = -(-nb // CHUNK_SIZE)
    out = np.empty(nb, dtype=np.float64)

    def fill(c: int) -> None:
        start = c * CHUNK_SIZE
        stop = min(start + CHUNK_SIZE, nb)
        out[start:stop] = _simulate_chunk(cfg, c, stop - start)

    if workers == 1 or n_chunks == 1:
        for c in range(n_chunks):
            fill(c)
    else:
        with ThreadPoolExecutor(max_workers=min(workers, n_chunks)) as pool:
            list(pool.map(fill, range(n_chunks)))
    return TTFSample(values=out, scenario=cfg)


def sweep(
    cfg: SweepConfig,
    *,
    workers: int | None = None,
    sample_cap: int = DEFAULT_SAMPLE_CAP,
    on_cell: Callable[[float, TTFSample], None] | None = None,
) -> SweepResult:
    """Simulate and summarize every p in the grid, relative to the p=0 baseline.

    The baseline cell is always simulated (reusing the grid cell when the
    grid starts at 0) so relative curves are defined for any grid. `on_cell`
    sees each grid cell's raw sample before it is released, letting callers
    extract densities or reliability curves without holding every sample.
    """
    entries: list[SweepEntry] = []
    baseline = None
    for p in cfg.p_grid:
        sample = simulate_batch(cfg.cell(p), workers=workers, sample_cap=sample_cap)
        stats = estimators.summary_stats(sample)
        entries.append(SweepEntry(p=p, stats=stats))
        if on_cell is not None:
            on_cell(p, sample)
        if p == 0.0:
            baseline = stats
    if baseline is None:
        baseline_sample = simulate_batch(
            cfg.cell(0.0), workers=workers, sample_cap=sample_cap
        )
        baseline = estimators.summary_stats(baseline_sample)
    return SweepResult(config=cfg, entries=entries, baseline=baseline)


@dataclass
class StreamedStats:
    """Deterministically merged moments plus a fixed-stride reservoir.

    Covers runs too large to materialize: exact count/mean/central moments
    and min/max, with median and mode estimated from the reservoir.
    """

    count: int
    mean: float
    m2: float  # centered power sums, not yet normalized
    m3: float
    m4: float
    minimum: float
    maximum: float
    reservoir: np.ndarray

    def summary(self) -> "estimators.SummaryStats":
        if self.count < 2:
            raise ValueError("need at least 2 samples for summary statistics")
        n = self.count
        var = self.m2 / (n - 1)
        mu2 = self.m2 / n
        if mu2 == 0.0:
            skew = kurt = float("nan")
            mode = float(self.reservoir[0])
        else:
            skew = (self.m3 / n) / mu2**1.5
            kurt = (self.m4 / n) / mu2**2 - 3.0
            mode = estimators.mode_estimate(self.reservoir)
        std = float(np.sqrt(var))
        return estimators.SummaryStats(
            mean=self.mean,
            median=float(np.median(self.reservoir)),
            mode=mode,
            std_dev=std,
            skewness=skew,
            kurtosis_excess=kurt,
            mean_std_error=std / np.sqrt(n),
            sample_count=n,
        )


def _merge_moments(a, b):
    # Pebay pairwise update for centered power sums
    na, ma, m2a, m3a, m4a = a
    nb, mb, m2b, m3b, m4b = b
    n = na + nb
    d = mb - ma
    d_n = d / n
    mean = ma + nb * d_n
    m2 = m2a + m2b + d * d_n * na * nb
    m3 = (
        m3a + m3b
        + d * d_n**2 * na * nb * (na - nb)
        + 3.0 * d_n * (na * m2b - nb * m2a)
    )
    m4 = (
        m4a + m4b
        + d * d_n**3 * na * nb * (na * na - na * nb + nb * nb)
        + 6.0 * d_n**2 * (na * na * m2b + nb * nb * m2a)
        + 4.0 * d_n * (na * m3b - nb * m3a)
    )
    return n, mean, m2, m3, m4


def simulate_stats(
    cfg: ScenarioConfig,
    *,
    workers: int | None = None,
    reservoir_size: int = 1 << 20,
) -> StreamedStats:
    """Streaming counterpart of simulate_batch for nb beyond the memory cap.

    Chunk moments are merged in chunk-index order and the reservoir keeps
    every stride-th sample, so the result is independent of worker count.
    """
    workers = resolve_workers(workers)
    nb = cfg.nb
    n_chunks = -(-nb // CHUNK_SIZE)
    stride = max(1, nb // reservoir_size)

    def chunk_stats(c: int):
        start = c * CHUNK_SIZE
        stop = min(start + CHUNK_SIZE, nb)
        t = _simulate_chunk(cfg, c, stop - start)
        mean = t.mean()
        d = t - mean
        d2 = d * d
        first = -start % stride  # first global index in this chunk on the stride
        kept = t[first::stride]
        return (
            (len(t), float(mean), float(d2.sum()), float((d2 * d).sum()), float((d2 * d2).sum())),
            float(t.min()),
            float(t.max()),
            kept,
        )

    if workers == 1 or n_chunks == 1:
        results = [chunk_stats(c) for c in range(n_chunks)]
    else:
        with ThreadPoolExecutor(max_workers=min(workers, n_chunks)) as pool:
            results = list(pool.map(chunk_stats, range(n_chunks)))

    acc, lo, hi, kept = results[0]
    parts = [kept]
    for moments, c_lo, c_hi, c_kept in results[1:]:
        acc = _merge_moments(acc, moments)
        lo = min(lo, c_lo)
        hi = max(hi, c_hi)
        parts.append(c_kept)
    n, mean, m2, m3, m4 = acc
    return StreamedStats(
        count=n,
        mean=mean,
        m2=m2,
        m3=m3,
        m4=m4,
        minimum=lo,
        maximum=hi,
        reservoir=np.concatenate(parts),
    )
