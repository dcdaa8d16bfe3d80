"""CSV and JSON output documents.

Numbers are rendered with Python's shortest round-trip float repr, so parsing
a payload back reproduces the in-memory values bit for bit. Payloads carry no
timestamp; the only run-varying field lives in JSON metadata, which keeps
repeat runs byte-comparable.
"""

from __future__ import annotations

import json
import math
from datetime import datetime, timezone
from typing import Any

import numpy as np

from . import __version__
from .engine import ScenarioConfig, SweepResult
from .estimators import DensityEstimate, ReliabilityCurve, SummaryStats

TOOL_NAME = "moonlab"

SWEEP_COLUMNS = [
    "model",
    "n",
    "m",
    "shape",
    "scale",
    "samples",
    "seed",
    "p",
    "mean",
    "mean_stderr",
    "median",
    "mode",
    "std_dev",
    "skewness",
    "kurtosis_excess",
    "rel_mean",
    "rel_median",
    "rel_mode",
    "rel_std_dev",
]


def fmt(value: Any) -> str:
    """Shortest decimal form that round-trips: ints verbatim, floats via repr."""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def metadata(config: dict[str, Any]) -> dict[str, Any]:
    """Document header: tool identity plus the fully resolved configuration."""
    return {
        "tool": TOOL_NAME,
        "version": __version__,
        "generated_at": datetime.now(timezone.utc).isoformat(),
        "config": config,
    }


def _clean(obj: Any) -> Any:
    """JSON-safe conversion: numpy scalars/arrays unwrapped, non-finite -> None."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


def dumps(doc: dict[str, Any]) -> str:
    return json.dumps(_clean(doc), indent=2, allow_nan=False) + "\n"


def stats_dict(stats: SummaryStats) -> dict[str, Any]:
    return {
        "mean": stats.mean,
        "mean_stderr": stats.mean_std_error,
        "median": stats.median,
        "mode": stats.mode,
        "std_dev": stats.std_dev,
        "skewness": stats.skewness,
        "kurtosis_excess": stats.kurtosis_excess,
        "sample_count": stats.sample_count,
    }


def density_dict(est: DensityEstimate) -> dict[str, Any]:
    return {
        "grid": est.grid,
        "density": est.density,
        "bandwidth": est.bandwidth,
    }


def reliability_dict(curve: ReliabilityCurve) -> dict[str, Any]:
    return {"t_grid": curve.t_grid, "survival": curve.survival}


def scenario_dict(cfg: ScenarioConfig, kde_grid: int | None = None) -> dict[str, Any]:
    doc = {
        "model": str(cfg.dep.model),
        "n": cfg.arch.n_components,
        "m": cfg.arch.m_required,
        "p": cfg.dep.p,
        "shape": cfg.dist.shape,
        "scale": cfg.dist.scale,
        "samples": cfg.nb,
        "seed": cfg.seed,
    }
    if kde_grid is not None:
        doc["kde_grid"] = kde_grid
    return doc


def simulate_document(
    cfg: ScenarioConfig,
    stats: SummaryStats,
    density: DensityEstimate,
    reliability: ReliabilityCurve,
    kde_grid: int,
) -> dict[str, Any]:
    return {
        "metadata": metadata(scenario_dict(cfg, kde_grid)),
        "stats": stats_dict(stats),
        "density": density_dict(density),
        "reliability": reliability_dict(reliability),
    }


def _row(prefix: list[str], stats: SummaryStats, p: float, rel: list[float]) -> str:
    cells = prefix + [
        fmt(p),
        fmt(stats.mean),
        fmt(stats.mean_std_error),
        fmt(stats.median),
        fmt(stats.mode),
        fmt(stats.std_dev),
        fmt(stats.skewness),
        fmt(stats.kurtosis_excess),
    ] + [fmt(v) for v in rel]
    return ",".join(cells)


def sweep_csv(result: SweepResult) -> str:
    """The fixed 19-column sweep schema, one row per grid p, LF line endings."""
    cfg = result.config
    prefix = [
        str(cfg.model),
        fmt(cfg.arch.n_components),
        fmt(cfg.arch.m_required),
        fmt(cfg.dist.shape),
        fmt(cfg.dist.scale),
        fmt(cfg.nb),
        fmt(cfg.seed),
    ]
    rel = result.relative
    lines = [",".join(SWEEP_COLUMNS)]
    for i, entry in enumerate(result.entries):
        lines.append(
            _row(
                prefix,
                entry.stats,
                entry.p,
                [rel.rel_mean[i], rel.rel_median[i], rel.rel_mode[i], rel.rel_std_dev[i]],
            )
        )
    return "\n".join(lines) + "\n"


def simulate_csv(cfg: ScenarioConfig, stats: SummaryStats) -> str:
    """Single-cell row in the sweep schema; rel_* are nan without a baseline."""
    prefix = [
        str(cfg.dep.model),
        fmt(cfg.arch.n_components),
        fmt(cfg.arch.m_required),
        fmt(cfg.dist.shape),
        fmt(cfg.dist.scale),
        fmt(cfg.nb),
        fmt(cfg.seed),
    ]
    nan = float("nan")
    lines = [",".join(SWEEP_COLUMNS), _row(prefix, stats, cfg.dep.p, [nan] * 4)]
    return "\n".join(lines) + "\n"


def sweep_document(result: SweepResult) -> dict[str, Any]:
    cfg = result.config
    rel = result.relative
    config = {
        "model": str(cfg.model),
        "n": cfg.arch.n_components,
        "m": cfg.arch.m_required,
        "shape": cfg.dist.shape,
        "scale": cfg.dist.scale,
        "samples": cfg.nb,
        "seed": cfg.seed,
        "p_grid": list(cfg.p_grid),
    }
    return {
        "metadata": metadata(config),
        "sweep": [
            {"p": e.p, **stats_dict(e.stats)} for e in result.entries
        ],
        "baseline": stats_dict(result.baseline),
        "relative": {
            "p": rel.p,
            "rel_mean": rel.rel_mean,
            "rel_median": rel.rel_median,
            "rel_mode": rel.rel_mode,
            "rel_std_dev": rel.rel_std_dev,
        },
    }
