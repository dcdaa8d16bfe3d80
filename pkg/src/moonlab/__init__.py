"""Monte Carlo workbench for M-out-of-N architectures with dependent components."""

__version__ = "0.1.0"

from .dependency import DependencyConfig, DependencyModel
from .engine import (
    ArchitectureSpec,
    ScenarioConfig,
    SweepConfig,
    SweepResult,
    TTFSample,
    simulate_batch,
    sweep,
    system_ttf,
)
from .estimators import (
    DensityEstimate,
    ReliabilityCurve,
    SummaryStats,
    empirical_reliability,
    gaussian_kde,
    mode_estimate,
    summary_stats,
)
from .streams import DistributionSpec, RandomStream, make_stream, weibull_inverse_cdf

__all__ = [
    "ArchitectureSpec",
    "DensityEstimate",
    "DependencyConfig",
    "DependencyModel",
    "DistributionSpec",
    "RandomStream",
    "ReliabilityCurve",
    "ScenarioConfig",
    "SummaryStats",
    "SweepConfig",
    "SweepResult",
    "TTFSample",
    "__version__",
    "empirical_reliability",
    "gaussian_kde",
    "make_stream",
    "mode_estimate",
    "simulate_batch",
    "summary_stats",
    "sweep",
    "system_ttf",
    "weibull_inverse_cdf",
]
