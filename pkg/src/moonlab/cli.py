"""Command-line front end.

Exit codes: 0 ok, 1 selftest failure, 2 usage error, 3 I/O error.

simulate/sweep export data (JSON or the fixed CSV schema); report additionally
renders the standard figures; oracle prints analytic values; selftest runs the
acceptance suite. The MOONLAB_THREADS environment variable caps the worker
count for every command (0 or unset = one worker per CPU).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, acceptance, engine, estimators, oracles, output
from .dependency import DependencyConfig, DependencyModel
from .engine import ArchitectureSpec, ScenarioConfig, SweepConfig
from .streams import DistributionSpec

EXIT_OK = 0
EXIT_SELFTEST_FAILED = 1
EXIT_USAGE = 2
EXIT_IO = 3

MODEL_CHOICES = [m.value for m in DependencyModel]


class UsageError(Exception):
    pass


def _add_cell_flags(p: argparse.ArgumentParser, with_p: bool = True) -> None:
    p.add_argument("--model", choices=MODEL_CHOICES, required=True, help="dependency model")
    p.add_argument("--n", type=int, default=3, help="number of components (default 3)")
    p.add_argument("--m", type=int, default=2, help="components required to operate (default 2)")
    if with_p:
        p.add_argument("--p", type=float, required=True, help="dependency parameter in [0,1]")
    p.add_argument("--shape", type=float, default=1.0, help="Weibull shape (default 1)")
    p.add_argument("--scale", type=float, default=1.0, help="Weibull scale (default 1)")
    p.add_argument("--samples", type=int, default=engine.DEFAULT_SAMPLES, help="samples per cell")
    p.add_argument("--seed", type=int, default=0, help="base seed (default 0)")


def _add_output_flags(p: argparse.ArgumentParser, default_format: str) -> None:
    p.add_argument("--out", type=Path, default=None, help="output path (default stdout)")
    p.add_argument(
        "--format",
        choices=["json", "csv"],
        default=default_format,
        help=f"output format (default {default_format})",
    )


def _arch(args) -> ArchitectureSpec:
    try:
        return ArchitectureSpec(args.n, args.m)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _dist(args) -> DistributionSpec:
    try:
        return DistributionSpec(args.shape, args.scale)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _p_values(args) -> tuple[float, ...]:
    if args.p_list is not None:
        try:
            values = tuple(float(v) for v in args.p_list.split(","))
        except ValueError as exc:
            raise UsageError(f"could not parse --p-list: {exc}") from exc
        return values
    return tuple(engine.default_p_grid(args.p_grid))


def _write(path: Path | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    path.write_text(text, encoding="utf-8", newline="")


def cmd_simulate(args) -> int:
    arch = _arch(args)
    dist = _dist(args)
    try:
        dep = DependencyConfig(DependencyModel(args.model), args.p)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    cfg = ScenarioConfig(arch=arch, dep=dep, dist=dist, nb=args.samples, seed=args.seed)
    sample = engine.simulate_batch(cfg)
    stats = estimators.summary_stats(sample)
    if args.format == "csv":
        _write(args.out, output.simulate_csv(cfg, stats))
        return EXIT_OK
    density = estimators.gaussian_kde(sample, grid_points=args.kde_grid)
    upper = float(np.quantile(sample.values, 0.9999))
    t_grid = np.linspace(0.0, max(upper, 1e-9), args.kde_grid)
    reliability = estimators.empirical_reliability(sample, t_grid)
    doc = output.simulate_document(cfg, stats, density, reliability, args.kde_grid)
    _write(args.out, output.dumps(doc))
    return EXIT_OK


def cmd_sweep(args) -> int:
    arch = _arch(args)
    dist = _dist(args)
    try:
        cfg = SweepConfig(
            arch=arch,
            model=DependencyModel(args.model),
            dist=dist,
            nb=args.samples,
            seed=args.seed,
            p_grid=_p_values(args),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    result = engine.sweep(cfg)
    if args.format == "csv":
        _write(args.out, output.sweep_csv(result))
    else:
        _write(args.out, output.dumps(output.sweep_document(result)))
    return EXIT_OK


def cmd_oracle(args) -> int:
    arch = _arch(args)
    dist = _dist(args)
    if (args.t is None) == (not args.mean):
        raise UsageError("pass exactly one of --t or --mean")
    model = DependencyModel(args.model)
    doc = {
        "model": model.value,
        "n": args.n,
        "m": args.m,
        "p": args.p,
        "shape": args.shape,
        "scale": args.scale,
    }
    if args.t is not None:
        if args.t < 0:
            raise UsageError("--t must be nonnegative")
        fn = oracles.model_reliability_fn(model, args.p, arch, dist)
        doc["t"] = args.t
        doc["reliability"] = float(f"{fn(args.t):.15g}")
    else:
        if model is DependencyModel.LINEAR and not dist.is_exponential and not args.quadrature:
            raise UsageError(
                "linear-model mean has no closed form for shape != 1; "
                "pass --quadrature to integrate the reliability instead"
            )
        doc["mean"] = float(f"{oracles.model_mean(model, args.p, arch, dist):.15g}")
    sys.stdout.write(json.dumps(doc, indent=2) + "\n")
    return EXIT_OK


def cmd_selftest(args) -> int:
    def progress(result):
        print(acceptance.format_result(result), flush=True)

    print(f"moonlab selftest: {args.samples} samples/cell, seed {args.seed}", flush=True)
    results = acceptance.run_suite(
        nb=args.samples, seed=args.seed, canary=args.canary, progress=progress
    )
    failed = sum(1 for r in results if not (r.passed or r.skipped or r.info_only))
    skipped = sum(1 for r in results if r.skipped)
    total = sum(r.seconds for r in results)
    verdict = "PASS" if failed == 0 else "FAIL"
    print(
        f"{verdict}: {len(results) - failed - skipped} passed, {failed} failed, "
        f"{skipped} skipped in {total:.1f}s",
        flush=True,
    )
    return EXIT_OK if failed == 0 else EXIT_SELFTEST_FAILED


def cmd_report(args) -> int:
    from . import report

    arch_ms = [int(v) for v in args.m_list.split(",")] if args.m_list else [1, 2, 3]
    for m in arch_ms:
        if not 1 <= m <= args.n:
            raise UsageError(f"every M in --m-list must satisfy 1 <= M <= N, got {m}")
    dist = _dist(args)
    try:
        paths = report.render_report(
            model=DependencyModel(args.model),
            n=args.n,
            m_list=arch_ms,
            dist=dist,
            nb=args.samples,
            seed=args.seed,
            p_grid=_p_values(args),
            outdir=args.outdir,
            kde_grid=args.kde_grid,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    for path in paths:
        print(path)
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from . import service

    uvicorn.run(service.app, host=args.host, port=service.resolve_port(args.port))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="moonlab",
        description="Monte Carlo workbench for M-out-of-N systems with dependent components",
    )
    parser.add_argument("--version", action="version", version=f"moonlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate one (model, M, N, p) cell")
    _add_cell_flags(p)
    _add_output_flags(p, "json")
    p.add_argument("--kde-grid", type=int, default=512, help="density grid points (default 512)")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("sweep", help="sweep the dependency parameter over a grid")
    _add_cell_flags(p, with_p=False)
    grid = p.add_mutually_exclusive_group()
    grid.add_argument("--p-grid", type=int, default=20, help="equally spaced grid size (default 20)")
    grid.add_argument("--p-list", type=str, default=None, help="explicit comma-separated p values")
    _add_output_flags(p, "csv")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("oracle", help="print analytic reliability or mean")
    _add_cell_flags(p)
    p.add_argument("--t", type=float, default=None, help="evaluate reliability at this time")
    p.add_argument("--mean", action="store_true", help="print the mean time to failure")
    p.add_argument(
        "--quadrature",
        action="store_true",
        help="allow quadrature for means without a closed form",
    )
    p.set_defaults(fn=cmd_oracle)

    p = sub.add_parser("selftest", help="run the acceptance suite")
    p.add_argument("--samples", type=int, default=acceptance.REFERENCE_NB)
    p.add_argument("--seed", type=int, default=acceptance.DEFAULT_SEED)
    p.add_argument(
        "--canary",
        action="store_true",
        help="test hook: invert M inside the engine; a healthy suite must fail",
    )
    p.set_defaults(fn=cmd_selftest)

    p = sub.add_parser("report", help="sweep and render figures alongside the CSV")
    p.add_argument("--model", choices=MODEL_CHOICES, required=True)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--m-list", type=str, default=None, help="comma-separated M values (default 1,2,3)")
    p.add_argument("--shape", type=float, default=1.0)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--samples", type=int, default=engine.DEFAULT_SAMPLES)
    p.add_argument("--seed", type=int, default=0)
    grid = p.add_mutually_exclusive_group()
    grid.add_argument("--p-grid", type=int, default=20)
    grid.add_argument("--p-list", type=str, default=None)
    p.add_argument("--kde-grid", type=int, default=512)
    p.add_argument("--outdir", type=Path, default=Path("moonlab-report"))
    p.set_defaults(fn=cmd_report)

    p = sub.add_parser("serve", help="run the HTTP API (and UI, if built)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=None, help="default: MOONLAB_PORT or 8000")
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
