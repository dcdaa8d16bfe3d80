"""Figure rendering for offline reports.

One report = one dependency model swept over p for a set of architectures:
per-architecture density and reliability panels with lines color-graded by p,
a relative-statistics grid (mean/median/mode rows), and the sweep CSV next to
the images.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib import cm

from . import engine, estimators, output
from .dependency import DependencyModel
from .engine import ArchitectureSpec, SweepConfig
from .streams import DistributionSpec


def _curve_axis(sweeps: dict[int, list]) -> float:
    upper = 0.0
    for curves in sweeps.values():
        for _, _, rel in curves:
            upper = max(upper, float(rel.t_grid[-1]))
    return upper


def render_report(
    model: DependencyModel,
    n: int,
    m_list: list[int],
    dist: DistributionSpec,
    nb: int,
    seed: int,
    p_grid: tuple[float, ...],
    outdir: Path,
    kde_grid: int = 512,
) -> list[Path]:
    """Run the sweeps and write CSVs plus the three standard figures."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    results: dict[int, engine.SweepResult] = {}
    curves: dict[int, list] = {m: [] for m in m_list}
    for m in m_list:
        cfg = SweepConfig(
            arch=ArchitectureSpec(n, m),
            model=model,
            dist=dist,
            nb=nb,
            seed=seed,
            p_grid=p_grid,
        )

        def collect(p, sample, m=m):
            density = estimators.gaussian_kde(sample, grid_points=kde_grid)
            upper = float(np.quantile(sample.values, 0.999))
            t = np.linspace(0.0, max(upper, 1e-9), 256)
            rel = estimators.empirical_reliability(sample, t)
            curves[m].append((p, density, rel))

        results[m] = engine.sweep(cfg, on_cell=collect)
        csv_path = outdir / f"sweep_{model.value}_{m}oo{n}.csv"
        csv_path.write_text(output.sweep_csv(results[m]), encoding="utf-8", newline="")
        written.append(csv_path)

    cmap = cm.viridis
    t_max = _curve_axis(curves)

    fig, axes = plt.subplots(1, len(m_list), figsize=(4.2 * len(m_list), 3.4), squeeze=False)
    for ax, m in zip(axes[0], m_list):
        for p, density, _ in curves[m]:
            ax.plot(density.grid, density.density, color=cmap(p), lw=1.0)
        ax.set_title(f"{m}oo{n}")
        ax.set_xlabel("time to failure")
        ax.set_xlim(0, t_max)
    axes[0][0].set_ylabel("density")
    fig.suptitle(f"TTF density, {model.value} model (p color-graded 0..1)")
    fig.tight_layout()
    path = outdir / f"density_{model.value}.png"
    fig.savefig(path, dpi=130)
    plt.close(fig)
    written.append(path)

    fig, axes = plt.subplots(1, len(m_list), figsize=(4.2 * len(m_list), 3.4), squeeze=False)
    for ax, m in zip(axes[0], m_list):
        for p, _, rel in curves[m]:
            ax.plot(rel.t_grid, rel.survival, color=cmap(p), lw=1.0)
        ax.set_title(f"{m}oo{n}")
        ax.set_xlabel("time")
        ax.set_ylim(0, 1.02)
        ax.set_xlim(0, t_max)
    axes[0][0].set_ylabel("reliability")
    fig.suptitle(f"system reliability, {model.value} model")
    fig.tight_layout()
    path = outdir / f"reliability_{model.value}.png"
    fig.savefig(path, dpi=130)
    plt.close(fig)
    written.append(path)

    stat_rows = [("rel_mean", "mean"), ("rel_median", "median"), ("rel_mode", "mode")]
    fig, axes = plt.subplots(
        3, len(m_list), figsize=(4.2 * len(m_list), 7.5), squeeze=False, sharex=True
    )
    for col, m in enumerate(m_list):
        rel = results[m].relative
        for row, (attr, label) in enumerate(stat_rows):
            ax = axes[row][col]
            ax.plot(rel.p, getattr(rel, attr), "o-", ms=3, lw=1.2)
            ax.axhline(1.0, color="0.6", lw=0.8, ls="--")
            if col == 0:
                ax.set_ylabel(f"relative {label}")
            if row == 0:
                ax.set_title(f"{m}oo{n}")
            if row == 2:
                ax.set_xlabel("dependency parameter p")
    fig.suptitle(f"statistics relative to p=0, {model.value} model")
    fig.tight_layout()
    path = outdir / f"relative_{model.value}.png"
    fig.savefig(path, dpi=130)
    plt.close(fig)
    written.append(path)

    return written
