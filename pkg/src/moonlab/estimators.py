"""Statistics extracted from a simulated time-to-failure sample.

The density estimator is a linear-binned Gaussian KDE on a uniform grid with
Silverman bandwidth: O(n + grid * kernel) instead of O(n * grid), which is
what makes per-cell modes affordable inside 20-point parameter sweeps. No
boundary correction is applied at t=0, so densities of lifetimes bunched
near zero carry a small known downward bias there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

if TYPE_CHECKING:
    from .engine import SweepResult, TTFSample

DEFAULT_KDE_GRID = 512
HAZARD_SURVIVAL_FLOOR = 0.01


class DegenerateSampleError(ValueError):
    """Sample has no spread, so a bandwidth cannot be inferred."""


def _values(sample) -> np.ndarray:
    v = getattr(sample, "values", sample)
    return np.asarray(v, dtype=np.float64)


@dataclass(frozen=True)
class SummaryStats:
    mean: float
    median: float
    mode: float
    std_dev: float
    skewness: float
    kurtosis_excess: float
    mean_std_error: float
    sample_count: int


@dataclass(frozen=True)
class DensityEstimate:
    grid: np.ndarray
    density: np.ndarray
    bandwidth: float

    def __post_init__(self) -> None:
        if self.grid.shape != self.density.shape:
            raise ValueError("grid and density lengths differ")


@dataclass(frozen=True)
class ReliabilityCurve:
    t_grid: np.ndarray
    survival: np.ndarray

    def __post_init__(self) -> None:
        if self.t_grid.shape != self.survival.shape:
            raise ValueError("t_grid and survival lengths differ")


@dataclass(frozen=True)
class HazardCurve:
    t_grid: np.ndarray
    rate: np.ndarray  # NaN where survival is below the floor


@dataclass(frozen=True)
class RelativeCurves:
    """Per-p statistics divided by their independent-baseline (p=0) values."""

    p: np.ndarray
    rel_mean: np.ndarray
    rel_median: np.ndarray
    rel_mode: np.ndarray
    rel_std_dev: np.ndarray


def summary_stats(sample: TTFSample | np.ndarray) -> SummaryStats:
    """Mean, midpoint median, KDE mode, (n-1) std, skewness and excess kurtosis.

    Skewness and kurtosis are standardized central moments; they come out NaN
    for a zero-variance sample, whose mode is then the constant itself.
    """
    v = _values(sample)
    n = v.size
    if n < 2:
        raise ValueError(f"need at least 2 samples, got {n}")
    mean = float(v.mean())
    c = v - mean
    c2 = c * c
    mu2 = float(c2.mean())
    if mu2 == 0.0:
        skew = kurt = float("nan")
        mode = float(v[0])
    else:
        mu3 = float((c2 * c).mean())
        mu4 = float((c2 * c2).mean())
        skew = mu3 / mu2**1.5
        kurt = mu4 / mu2**2 - 3.0
        mode = mode_estimate(v)
    std = math.sqrt(mu2 * n / (n - 1))
    return SummaryStats(
        mean=mean,
        median=float(np.median(v)),
        mode=mode,
        std_dev=std,
        skewness=skew,
        kurtosis_excess=kurt,
        mean_std_error=std / math.sqrt(n),
        sample_count=n,
    )


def silverman_bandwidth(values: np.ndarray) -> float:
    """0.9 * min(std, IQR/1.34) * n^(-1/5), ignoring whichever spread is zero."""
    v = _values(values)
    std = float(v.std(ddof=1)) if v.size > 1 else 0.0
    q75, q25 = np.percentile(v, [75.0, 25.0])
    iqr = float(q75 - q25)
    spreads = [s for s in (std, iqr / 1.34) if s > 0.0]
    if not spreads:
        raise DegenerateSampleError(
            "sample has zero variance and zero IQR; pass a bandwidth override"
        )
    return 0.9 * min(spreads) * v.size ** (-0.2)


def gaussian_kde(
    sample: TTFSample | np.ndarray,
    grid_points: int = DEFAULT_KDE_GRID,
    bandwidth_override: float | None = None,
) -> DensityEstimate:
    """Linear-binned Gaussian KDE on a uniform grid clipped to t >= 0.

    The grid spans [max(0, min-3h), max+3h]; samples are split between their
    two neighboring grid nodes and the binned counts are convolved with a
    Gaussian kernel truncated at 4 bandwidths.
    """
    v = _values(sample)
    if v.size < 1:
        raise ValueError("empty sample")
    if bandwidth_override is not None:
        if bandwidth_override <= 0:
            raise ValueError("bandwidth override must be positive")
        h = float(bandwidth_override)
    else:
        if v.size < 2:
            raise ValueError("need at least 2 samples unless a bandwidth is given")
        h = silverman_bandwidth(v)
    if grid_points < 2:
        raise ValueError(f"grid needs at least 2 points, got {grid_points}")

    lo = max(0.0, float(v.min()) - 3.0 * h)
    hi = float(v.max()) + 3.0 * h
    grid = np.linspace(lo, hi, grid_points)
    step = (hi - lo) / (grid_points - 1)

    pos = (v - lo) / step
    idx = np.minimum(pos.astype(np.int64), grid_points - 2)
    frac = pos - idx
    counts = np.bincount(idx, weights=1.0 - frac, minlength=grid_points)
    counts += np.bincount(idx + 1, weights=frac, minlength=grid_points)

    half = max(1, int(np.ceil(4.0 * h / step)))
    offsets = np.arange(-half, half + 1) * step
    kernel = np.exp(-0.5 * (offsets / h) ** 2) / (h * math.sqrt(2.0 * math.pi))
    density = np.convolve(counts, kernel, mode="full")[half : half + grid_points]
    density /= v.size
    return DensityEstimate(grid=grid, density=density, bandwidth=h)


def mode_estimate(sample: TTFSample | np.ndarray) -> float:
    """Argmax of the default-settings KDE; ties resolve to the smallest t."""
    est = gaussian_kde(sample)
    return float(est.grid[int(np.argmax(est.density))])


def empirical_reliability(
    sample: TTFSample | np.ndarray, t_grid: Sequence[float]
) -> ReliabilityCurve:
    """Fraction of simulated lifetimes strictly beyond each grid time."""
    v = np.sort(_values(sample))
    t = np.asarray(t_grid, dtype=np.float64)
    if t.ndim != 1 or t.size == 0:
        raise ValueError("t_grid must be a nonempty 1-D array")
    if np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    survivors = v.size - np.searchsorted(v, t, side="right")
    return ReliabilityCurve(t_grid=t, survival=survivors / v.size)


def hazard_estimate(density: DensityEstimate, reliability: ReliabilityCurve) -> HazardCurve:
    """Instantaneous failure rate density/survival on a shared grid.

    Points where survival falls below the floor are NaN rather than letting
    tail noise explode into huge or infinite rates.
    """
    if not np.array_equal(density.grid, reliability.t_grid):
        raise ValueError("density and reliability are on different grids")
    rate = np.full_like(density.density, np.nan)
    ok = reliability.survival >= HAZARD_SURVIVAL_FLOOR
    rate[ok] = density.density[ok] / reliability.survival[ok]
    return HazardCurve(t_grid=density.grid, rate=rate)


def _ratio(value: float, base: float) -> float:
    if base == 0.0 or math.isnan(base):
        return float("nan")
    return value / base


def relative_stats(result: SweepResult) -> RelativeCurves:
    """Each statistic divided by its p=0 baseline; exactly 1 at the baseline."""
    base = result.baseline
    p = np.array([e.p for e in result.entries])
    return RelativeCurves(
        p=p,
        rel_mean=np.array([_ratio(e.stats.mean, base.mean) for e in result.entries]),
        rel_median=np.array([_ratio(e.stats.median, base.median) for e in result.entries]),
        rel_mode=np.array([_ratio(e.stats.mode, base.mode) for e in result.entries]),
        rel_std_dev=np.array(
            [_ratio(e.stats.std_dev, base.std_dev) for e in result.entries]
        ),
    )
