"""HTTP JSON facade over the engine, estimators, and oracles.

Synchronous request/response: at the default 1e7-sample cap a cell finishes
in seconds, so there is no job queue. A bounded semaphore keeps concurrent
simulations from oversubscribing the CPU; every request runs on its own
streams and touches no shared mutable state, so identical bodies always
produce identical payloads (compute_time aside).

Environment: MOONLAB_PORT, MOONLAB_SAMPLE_CAP, MOONLAB_THREADS, and
MOONLAB_UI_DIR to override where the built UI bundle is served from.
"""

from __future__ import annotations

import math
import os
import threading
import time
from pathlib import Path
from typing import Literal

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field, field_validator

from . import __version__, engine, estimators, oracles
from .dependency import DependencyConfig, DependencyModel
from .engine import ArchitectureSpec, ScenarioConfig, SweepConfig
from .streams import DistributionSpec

DEFAULT_SAMPLE_CAP = 10**7
DEFAULT_PORT = 8000
MAX_CURVE_POINTS = 1024

_sim_gate = threading.BoundedSemaphore(os.cpu_count() or 1)


def resolve_sample_cap() -> int:
    raw = os.environ.get("MOONLAB_SAMPLE_CAP", "").strip()
    return int(raw) if raw else DEFAULT_SAMPLE_CAP


def resolve_port(explicit: int | None = None) -> int:
    if explicit is not None:
        return explicit
    raw = os.environ.get("MOONLAB_PORT", "").strip()
    return int(raw) if raw else DEFAULT_PORT


class SimulationRequest(BaseModel):
    model: Literal["linear", "global-ccf", "marginal-ccf"]
    n: int = Field(default=3, ge=1, le=64)
    m: int = Field(default=2, ge=1)
    p: float | None = Field(default=None, ge=0.0, le=1.0)
    p_grid: list[float] | int | None = None
    shape: float = Field(default=1.0, gt=0.0)
    scale: float = Field(default=1.0, gt=0.0)
    samples: int = Field(default=engine.DEFAULT_SAMPLES, ge=2)
    seed: int = Field(default=0, ge=0)
    kde_grid: int = Field(default=512, ge=16, le=MAX_CURVE_POINTS)
    include_oracle: bool = False

    @field_validator("m")
    @classmethod
    def _m_within_n(cls, v, info):
        n = info.data.get("n")
        if n is not None and v > n:
            raise ValueError(f"m must satisfy 1 <= M <= N, got M={v}, N={n}")
        return v

    def grid_values(self) -> tuple[float, ...]:
        if self.p_grid is None:
            raise HTTPException(
                status_code=422,
                detail=[{"loc": ["body", "p_grid"], "msg": "p_grid is required for sweeps"}],
            )
        if isinstance(self.p_grid, int):
            if not 2 <= self.p_grid <= 201:
                raise HTTPException(
                    status_code=422,
                    detail=[{"loc": ["body", "p_grid"], "msg": "grid size must be in [2, 201]"}],
                )
            return tuple(engine.default_p_grid(self.p_grid))
        return tuple(self.p_grid)


class OracleRequest(BaseModel):
    model: Literal["linear", "global-ccf", "marginal-ccf"]
    n: int = Field(default=3, ge=1, le=64)
    m: int = Field(default=2, ge=1)
    p: float = Field(ge=0.0, le=1.0)
    t: float | None = Field(default=None, ge=0.0)
    mean: bool = False
    shape: float = Field(default=1.0, gt=0.0)
    scale: float = Field(default=1.0, gt=0.0)
    quadrature: bool = False

    @field_validator("m")
    @classmethod
    def _m_within_n(cls, v, info):
        n = info.data.get("n")
        if n is not None and v > n:
            raise ValueError(f"m must satisfy 1 <= M <= N, got M={v}, N={n}")
        return v


def _finite(values) -> list:
    out = []
    for v in np.asarray(values, dtype=np.float64).tolist():
        out.append(v if math.isfinite(v) else None)
    return out


def _decimate(arr: np.ndarray, limit: int = MAX_CURVE_POINTS) -> np.ndarray:
    if arr.size <= limit:
        return arr
    idx = np.unique(np.linspace(0, arr.size - 1, limit).round().astype(int))
    return arr[idx]


def _stats_payload(stats: estimators.SummaryStats) -> dict:
    return {
        "mean": stats.mean,
        "mean_stderr": stats.mean_std_error,
        "median": stats.median,
        "mode": stats.mode,
        "std_dev": stats.std_dev,
        "skewness": None if math.isnan(stats.skewness) else stats.skewness,
        "kurtosis_excess": None
        if math.isnan(stats.kurtosis_excess)
        else stats.kurtosis_excess,
        "sample_count": stats.sample_count,
    }


def _curves_payload(sample: engine.TTFSample, kde_grid: int) -> tuple[dict, dict, np.ndarray]:
    density = estimators.gaussian_kde(sample, grid_points=kde_grid)
    upper = float(np.quantile(sample.values, 0.9999))
    t_grid = np.linspace(0.0, max(upper, 1e-9), kde_grid)
    reliability = estimators.empirical_reliability(sample, t_grid)
    t_dec = _decimate(t_grid)
    density_payload = {
        "grid": _finite(_decimate(density.grid)),
        "density": _finite(_decimate(density.density)),
        "bandwidth": density.bandwidth,
    }
    reliability_payload = {
        "t_grid": _finite(t_dec),
        "survival": _finite(_decimate(reliability.survival)),
    }
    return density_payload, reliability_payload, t_dec


def _check_sample_cap(samples: int) -> None:
    cap = resolve_sample_cap()
    if samples > cap:
        raise HTTPException(
            status_code=413,
            detail={
                "field": "samples",
                "reason": f"samples={samples} exceeds the server cap of {cap}",
                "max_samples": cap,
            },
        )


def create_app(ui_dir: Path | None = None) -> FastAPI:
    app = FastAPI(title="moonlab", version=__version__)

    @app.get("/api/v1/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.post("/api/v1/simulate")
    def simulate(req: SimulationRequest) -> dict:
        if req.p is None:
            raise HTTPException(
                status_code=422,
                detail=[{"loc": ["body", "p"], "msg": "scalar p is required for simulate"}],
            )
        _check_sample_cap(req.samples)
        start = time.perf_counter()
        cfg = ScenarioConfig(
            arch=ArchitectureSpec(req.n, req.m),
            dep=DependencyConfig(DependencyModel(req.model), req.p),
            dist=DistributionSpec(req.shape, req.scale),
            nb=req.samples,
            seed=req.seed,
        )
        with _sim_gate:
            sample = engine.simulate_batch(cfg)
            stats = estimators.summary_stats(sample)
            density, reliability, t_dec = _curves_payload(sample, req.kde_grid)
        doc = {
            "request": req.model_dump(),
            "stats": _stats_payload(stats),
            "density": density,
            "reliability": reliability,
        }
        if req.include_oracle:
            fn = oracles.model_reliability_fn(
                DependencyModel(req.model),
                req.p,
                ArchitectureSpec(req.n, req.m),
                DistributionSpec(req.shape, req.scale),
            )
            doc["oracle"] = {
                "reliability": _finite([fn(t) for t in t_dec]),
                "mean": oracles.model_mean(
                    DependencyModel(req.model),
                    req.p,
                    ArchitectureSpec(req.n, req.m),
                    DistributionSpec(req.shape, req.scale),
                ),
            }
        doc["compute_time"] = time.perf_counter() - start
        return doc

    @app.post("/api/v1/sweep")
    def run_sweep(req: SimulationRequest) -> dict:
        grid = req.grid_values()
        _check_sample_cap(req.samples)
        start = time.perf_counter()
        try:
            cfg = SweepConfig(
                arch=ArchitectureSpec(req.n, req.m),
                model=DependencyModel(req.model),
                dist=DistributionSpec(req.shape, req.scale),
                nb=req.samples,
                seed=req.seed,
                p_grid=grid,
            )
        except ValueError as exc:
            raise HTTPException(
                status_code=422, detail=[{"loc": ["body", "p_grid"], "msg": str(exc)}]
            ) from exc
        curves = []

        def collect(p: float, sample: engine.TTFSample) -> None:
            density, reliability, _ = _curves_payload(sample, req.kde_grid)
            curves.append({"p": p, "density": density, "reliability": reliability})

        with _sim_gate:
            result = engine.sweep(cfg, on_cell=collect)
        rel = result.relative
        doc = {
            "request": req.model_dump(),
            "sweep": [{"p": e.p, **_stats_payload(e.stats)} for e in result.entries],
            "baseline": _stats_payload(result.baseline),
            "relative": {
                "p": _finite(rel.p),
                "rel_mean": _finite(rel.rel_mean),
                "rel_median": _finite(rel.rel_median),
                "rel_mode": _finite(rel.rel_mode),
                "rel_std_dev": _finite(rel.rel_std_dev),
            },
            "curves": curves,
        }
        if req.include_oracle:
            arch = ArchitectureSpec(req.n, req.m)
            dist = DistributionSpec(req.shape, req.scale)
            doc["oracle"] = {
                "mean": [
                    oracles.model_mean(DependencyModel(req.model), p, arch, dist)
                    for p in cfg.p_grid
                ]
            }
        doc["compute_time"] = time.perf_counter() - start
        return doc

    @app.post("/api/v1/oracle")
    def oracle(req: OracleRequest) -> dict:
        arch = ArchitectureSpec(req.n, req.m)
        dist = DistributionSpec(req.shape, req.scale)
        model = DependencyModel(req.model)
        if (req.t is None) == (not req.mean):
            raise HTTPException(
                status_code=422,
                detail=[{"loc": ["body", "t"], "msg": "pass exactly one of t or mean"}],
            )
        doc = req.model_dump()
        if req.t is not None:
            fn = oracles.model_reliability_fn(model, req.p, arch, dist)
            doc["reliability"] = fn(req.t)
        else:
            if model is DependencyModel.LINEAR and not dist.is_exponential and not req.quadrature:
                raise HTTPException(
                    status_code=422,
                    detail=[
                        {
                            "loc": ["body", "mean"],
                            "msg": "linear-model mean needs quadrature=true for shape != 1",
                        }
                    ],
                )
            doc["mean"] = oracles.model_mean(model, req.p, arch, dist)
        return doc

    bundle = ui_dir
    if bundle is None:
        env_dir = os.environ.get("MOONLAB_UI_DIR", "").strip()
        if env_dir:
            bundle = Path(env_dir)
        else:
            candidate = Path(__file__).resolve().parents[2] / "frontend" / "dist"
            bundle = candidate if candidate.is_dir() else None
    if bundle is not None and Path(bundle).is_dir():
        app.mount("/", StaticFiles(directory=str(bundle), html=True), name="ui")

    return app


app = create_app()


def main() -> None:
    import uvicorn

    uvicorn.run(app, host="0.0.0.0", port=resolve_port())


if __name__ == "__main__":
    main()
