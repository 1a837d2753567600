"""Command-line surface: parameter derivation, particle simulation, radial
PDE solves, and verification suites, emitting CSV/JSON artifacts.

Exit codes: 0 success / all checks pass; 1 a verification check failed;
2 usage or validation error; 3 numerical abort (solver blew up or a
quadrature failed).  Every artifact-writing command records a
``manifest.json`` that reproduces the run byte-identically and refuses to
overwrite existing artifacts unless ``--force`` is given.  The output root
defaults to ``$BARENBLATT_OUT`` (falling back to the working directory).
"""
from __future__ import annotations

import csv
import json
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__, core, verify
from ._kernels import default_backend, get_backend
from .numerics import NumericsError
from .pde import (SolverAbort, grid_for, profile_cell_averages, save_radial_csv,
                  solve_linearized, solve_plaplace)
from .sde import SimConfig, save_paths_csv, simulate

SUITES = ("marginals", "support", "weakform", "exponents", "integrability",
          "flow", "markov", "linearized", "all")

_EXIT_CHECK_FAILED = 1
_EXIT_NUMERICAL = 3


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _out_dir(out: str | None, default_name: str) -> Path:
    if out is not None:
        return Path(out)
    root = os.environ.get("BARENBLATT_OUT", ".")
    return Path(root) / default_name


def _prepare_dir(path: Path, names: list[str], force: bool) -> None:
    path.mkdir(parents=True, exist_ok=True)
    clashes = [n for n in names if (path / n).exists()]
    if clashes and not force:
        raise click.UsageError(
            f"refusing to overwrite {', '.join(clashes)} in {path} "
            "(pass --force to allow)")


def _write_manifest(path: Path, command: str, backend: str, config: dict,
                    extra: dict | None = None) -> None:
    manifest = {"version": __version__, "command": command,
                "backend": backend, "config": config}
    if extra:
        manifest.update(extra)
    (path / "manifest.json").write_text(_json_text(manifest), encoding="utf-8")


def _write_trace(path: Path, report: verify.CheckReport) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["name", "value", "tol", "pass"])
        for row in report.stats:
            writer.writerow([row["name"], "%.17g" % row["value"],
                             "%.17g" % row["tol"],
                             "true" if row["pass"] else "false"])


def _sim_config(d, p, y, delta, t0, t_end, h, paths, seed, workers,
                backend) -> SimConfig:
    return SimConfig(d=d, p=p, y=tuple(y) if y else (),
                     delta=delta, t_start=t0, t_end=t_end, h=h,
                     n_paths=paths, seed=seed, n_workers=workers,
                     backend=backend)


def _fail_usage(exc: Exception) -> None:
    raise click.UsageError(str(exc))


@click.group()
@click.version_option(version=__version__, prog_name="barenblatt")
def main() -> None:
    """Closed-form profile toolkit: parameters, simulation, PDE, checks."""


# ---------------------------------------------------------------------------
# params
# ---------------------------------------------------------------------------

@main.command("params")
@click.option("--d", type=int, required=True, help="spatial dimension (>= 1)")
@click.option("--p", type=float, required=True, help="nonlinearity exponent (> 2)")
def cmd_params(d: int, p: float) -> None:
    """Derive and print the profile constants as JSON."""
    try:
        params = core.derive_params(d, p)
    except (ValueError, NumericsError) as exc:
        _fail_usage(exc)
    click.echo(_json_text(params.as_dict()), nl=False)


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

@main.command("simulate")
@click.option("--d", type=int, default=2, show_default=True)
@click.option("--p", type=float, default=4.0, show_default=True)
@click.option("--y", type=float, multiple=True,
              help="profile center, one value per coordinate")
@click.option("--delta", type=float, default=0.0, show_default=True,
              help="physical-time offset of the initial profile")
@click.option("--t0", type=float, default=0.05, show_default=True,
              help="warm-start time when delta = 0")
@click.option("--T", "t_end", type=float, default=1.0, show_default=True,
              help="final process time")
@click.option("--h", type=float, default=1e-3, show_default=True,
              help="Euler step size")
@click.option("--paths", type=int, default=10000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--snapshots", type=str, default="",
              help="comma-separated snapshot times (on the step grid)")
@click.option("--workers", type=int, default=4, show_default=True)
@click.option("--backend", type=str, default=None,
              help="kernel backend (default: best available)")
@click.option("--out", type=str, default=None, help="output directory")
@click.option("--force", is_flag=True, help="overwrite existing artifacts")
def cmd_simulate(d, p, y, delta, t0, t_end, h, paths, seed, snapshots,
                 workers, backend, out, force) -> None:
    """Run the interacting-particle simulation and write ensemble.csv."""
    try:
        snaps = tuple(float(s) for s in snapshots.split(",") if s.strip())
        cfg = _sim_config(d, p, y, delta, t0, t_end, h, paths, seed,
                          workers, backend)
        kern = get_backend(backend)
    except ValueError as exc:
        _fail_usage(exc)
    out_path = _out_dir(out, "simulate")
    _prepare_dir(out_path, ["ensemble.csv", "manifest.json"], force)
    try:
        ens = simulate(cfg, snapshot_times=snaps)
    except ValueError as exc:
        _fail_usage(exc)
    if not np.isfinite(ens.x).all():
        bad = int((~np.isfinite(ens.x).all(axis=1)).sum())
        _write_manifest(out_path, "simulate", kern.BACKEND_NAME,
                        cfg.manifest_dict(),
                        {"abort": {"reason": "non-finite path positions",
                                   "paths_affected": bad}})
        click.echo(f"numerical abort: {bad} paths went non-finite "
                   f"(diagnostics in {out_path / 'manifest.json'})", err=True)
        sys.exit(_EXIT_NUMERICAL)
    marks = tuple(sorted(set(snaps) | {ens.t_final}))
    save_paths_csv(out_path / "ensemble.csv", ens, times=marks)
    _write_manifest(out_path, "simulate", ens.backend_name,
                    {**cfg.manifest_dict(), "snapshots": list(marks)})
    click.echo(f"wrote {out_path / 'ensemble.csv'} "
               f"({paths} paths, backend {ens.backend_name})")


# ---------------------------------------------------------------------------
# pde
# ---------------------------------------------------------------------------

@main.command("pde")
@click.option("--kind", type=click.Choice(["nonlinear", "linearized"]),
              default="nonlinear", show_default=True)
@click.option("--d", type=int, default=2, show_default=True)
@click.option("--p", type=float, default=4.0, show_default=True)
@click.option("--delta", type=float, default=0.1, show_default=True,
              help="physical time of the initial profile (> 0)")
@click.option("--T", "duration", type=float, default=0.9, show_default=True,
              help="evolution duration")
@click.option("--cells", type=int, default=1000, show_default=True)
@click.option("--cfl", type=float, default=0.4, show_default=True)
@click.option("--snapshots", type=str, default="",
              help="comma-separated snapshot times in (0, T)")
@click.option("--tol", type=float, default=5e-3, show_default=True,
              help="L1-vs-closed-form pass tolerance")
@click.option("--backend", type=str, default=None)
@click.option("--out", type=str, default=None)
@click.option("--force", is_flag=True)
def cmd_pde(kind, d, p, delta, duration, cells, cfl, snapshots, tol,
            backend, out, force) -> None:
    """Solve the radial equation from a profile start; compare to the
    closed form and write trajectory.csv plus summary.json."""
    try:
        snaps = tuple(float(s) for s in snapshots.split(",") if s.strip())
        params = core.derive_params(d, p)
        if not delta > 0.0:
            raise ValueError("--delta must be positive (profile start time)")
        if not duration > 0.0:
            raise ValueError("--T must be positive")
        if cells < 2:
            raise ValueError("--cells must be at least 2")
        if not 0.0 < cfl < 1.0:
            raise ValueError("--cfl must be in (0, 1)")
        for s in snaps:
            if not delta < s <= delta + duration + 1e-12:
                raise ValueError(f"snapshot time {s!r} outside "
                                 f"({delta:g}, {delta + duration:g}]")
        kern = get_backend(backend)
        grid = grid_for(params, delta + duration, cells)
        u0 = profile_cell_averages(params, delta, grid)
    except (ValueError, NumericsError) as exc:
        _fail_usage(exc)
    out_path = _out_dir(out, f"pde-{kind}")
    _prepare_dir(out_path, ["trajectory.csv", "summary.json",
                            "manifest.json"], force)
    config = {"kind": kind, "d": d, "p": p, "delta": delta, "T": duration,
              "cells": cells, "cfl": cfl, "snapshots": list(snaps),
              "tol": tol}
    try:
        if kind == "nonlinear":
            res = solve_plaplace(grid, u0, p, duration, t_from=delta,
                                 cfl=cfl, backend=backend,
                                 snapshot_times=snaps)
        else:
            res = solve_linearized(grid, u0, params, duration, delta=delta,
                                   cfl=cfl, backend=backend,
                                   snapshot_times=snaps)
    except SolverAbort as exc:
        _write_manifest(out_path, "pde", kern.BACKEND_NAME, config,
                        {"abort": {"reason": str(exc), "steps": exc.steps,
                                   "t_reached": exc.t_reached}})
        click.echo(f"numerical abort: {exc}", err=True)
        sys.exit(_EXIT_NUMERICAL)
    ref = profile_cell_averages(params, delta + duration, grid)
    l1 = grid.l1_distance(res.u, ref)
    passed = bool(l1 <= tol)
    summary = {"kind": kind, "params": {"d": d, "p": p, "delta": delta},
               "l1_error_vs_closed_form": float(l1), "tol": tol,
               "steps": res.steps,
               "max_relative_mass_deviation": float(res.max_mass_dev),
               "clipped_cells": res.clipped_cells, "pass": passed}
    save_radial_csv(out_path / "trajectory.csv", res)
    (out_path / "summary.json").write_text(_json_text(summary),
                                           encoding="utf-8")
    _write_manifest(out_path, "pde", kern.BACKEND_NAME, config)
    click.echo(f"L1 error vs closed form: {l1:.3e} (tol {tol:g}) -> "
               f"{'pass' if passed else 'FAIL'}")
    if not passed:
        sys.exit(_EXIT_CHECK_FAILED)


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def _run_suite(suite: str, *, cfg: SimConfig, params_dp, delta, t_end, t_mid,
               cells, leak_margin, backend) -> list[verify.CheckReport]:
    params = core.derive_params(*params_dp)
    if suite == "marginals":
        return [verify.marginals_check(cfg, times=(t_mid,))]
    if suite == "support":
        return [verify.support_check(cfg, margin=leak_margin, times=(t_mid,))]
    if suite == "weakform":
        return [verify.weakform_check(params, delta=delta),
                verify.initial_condition_check(params)]
    if suite == "exponents":
        return [verify.exponents_check(reference=params_dp)]
    if suite == "integrability":
        return [verify.integrability_check(params, t_end)]
    if suite == "flow":
        return [verify.flow_analytic_check(params, delta=delta),
                verify.flow_ensemble_check(cfg, t_mid)]
    if suite == "markov":
        return [verify.conditional_consistency_check(cfg, t_mid)]
    if suite == "linearized":
        return [verify.linearized_check(params, cells=cells, backend=backend)]
    if suite == "all":
        shared = simulate(cfg, snapshot_times=(t_mid,), params=params)
        reports = [
            verify.exponents_check(reference=params_dp),
            verify.weakform_check(params, delta=delta),
            verify.initial_condition_check(params),
            verify.integrability_check(params, t_end),
            verify.flow_analytic_check(params, delta=delta),
            verify.marginals_check(cfg, times=(t_mid,), ens=shared),
            verify.support_check(cfg, margin=leak_margin, times=(t_mid,),
                                 ens=shared),
            verify.flow_ensemble_check(cfg, t_mid, direct=shared),
            verify.conditional_consistency_check(cfg, t_mid, direct=shared),
            verify.linearized_check(params, cells=cells, backend=backend),
        ]
        if params.markov_admissible and cfg.d >= 1:
            ycfg = SimConfig(**{**cfg.manifest_dict(),
                                "y": tuple([0.7] + [0.0] * (cfg.d - 1))},
                             n_workers=cfg.n_workers, backend=cfg.backend)
            reports.append(verify.translation_check(ycfg, t_mid,
                                                    params=params))
        return reports
    raise click.UsageError(f"unknown suite {suite!r}")


@main.command("verify")
@click.argument("suite", type=click.Choice(SUITES))
@click.option("--d", type=int, default=2, show_default=True)
@click.option("--p", type=float, default=4.0, show_default=True)
@click.option("--delta", type=float, default=0.0, show_default=True)
@click.option("--t0", type=float, default=0.05, show_default=True)
@click.option("--T", "t_end", type=float, default=0.8, show_default=True)
@click.option("--t-mid", type=float, default=0.3, show_default=True,
              help="intermediate time for restart/conditional suites")
@click.option("--h", type=float, default=2e-3, show_default=True)
@click.option("--paths", type=int, default=20000, show_default=True)
@click.option("--cells", type=int, default=800, show_default=True,
              help="grid cells for the linearized suite")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--leak-margin", type=float, default=1.05, show_default=True,
              help="support-check radius factor (0 injects the documented fault)")
@click.option("--workers", type=int, default=4, show_default=True)
@click.option("--backend", type=str, default=None)
@click.option("--out", type=str, default=None)
@click.option("--force", is_flag=True)
def cmd_verify(suite, d, p, delta, t0, t_end, t_mid, h, paths, cells, seed,
               leak_margin, workers, backend, out, force) -> None:
    """Run a verification suite; exit 0 iff every check passes."""
    try:
        cfg = _sim_config(d, p, (), delta, t0, t_end, h, paths, seed,
                          workers, backend)
        kern = get_backend(backend)
    except ValueError as exc:
        _fail_usage(exc)
    out_path = _out_dir(out, f"verify-{suite}")
    _prepare_dir(out_path, ["report.json", "manifest.json"], force)
    config = {**cfg.manifest_dict(), "suite": suite, "t_mid": t_mid,
              "cells": cells, "leak_margin": leak_margin}
    try:
        reports = _run_suite(suite, cfg=cfg, params_dp=(d, p), delta=delta,
                             t_end=t_end, t_mid=t_mid, cells=cells,
                             leak_margin=leak_margin, backend=backend)
    except (ValueError, NumericsError, SolverAbort) as exc:
        click.echo(f"numerical abort: {exc}", err=True)
        sys.exit(_EXIT_NUMERICAL)
    if len(reports) == 1:
        payload = reports[0].to_dict()
    else:
        payload = {"check": suite, "reports": [r.to_dict() for r in reports],
                   "pass": all(r.passed for r in reports)}
    (out_path / "report.json").write_text(_json_text(payload),
                                          encoding="utf-8")
    for rep in reports:
        _write_trace(out_path / f"trace-{rep.check}.csv", rep)
    _write_manifest(out_path, "verify", kern.BACKEND_NAME, config)
    ok = all(r.passed for r in reports)
    for rep in reports:
        click.echo(f"[{'PASS' if rep.passed else 'FAIL'}] {rep.check} "
                   f"({len(rep.stats)} statistics)")
    if not ok:
        sys.exit(_EXIT_CHECK_FAILED)


if __name__ == "__main__":
    main()
