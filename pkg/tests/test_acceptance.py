"""Acceptance gate: eleven desk-scale criteria, each with its stated
tolerance and wall-clock budget, printing one [PASS]/[FAIL] line apiece
(visible under ``pytest -s`` and in captured output on failure).

The heavy 1e5-path ensembles are built lazily and cached at module scope so
the first criterion that needs one pays for it inside its own budget and
later criteria reuse it.
"""
import json
import time
from contextlib import contextmanager
from dataclasses import replace

import numpy as np
from click.testing import CliRunner

from barenblatt import cli, core, stats
from barenblatt.numerics import integrate_radial
from barenblatt.sde import SimConfig, restart, simulate
from barenblatt.verify import (
    conditional_consistency_check,
    exponents_check,
    integrability_check,
    linearized_check,
    plaplace_check,
    weakform_check,
)


@contextmanager
def criterion(n: int, label: str, budget_s: float):
    t0 = time.monotonic()
    try:
        yield
    except BaseException:
        print(f"[FAIL] criterion {n}: {label}")
        raise
    dt = time.monotonic() - t0
    assert dt < budget_s, f"criterion {n} took {dt:.1f}s (budget {budget_s}s)"
    print(f"[PASS] criterion {n}: {label} ({dt:.1f}s < {budget_s:g}s)")


ACCEPT_CFG = SimConfig(d=2, p=4.0, t_start=0.05, t_end=1.0, h=1e-3,
                       noise_h=5e-4, n_paths=100000, seed=2024, n_workers=4)

_cache: dict = {}


def _params24():
    if "p24" not in _cache:
        _cache["p24"] = core.derive_params(2, 4.0)
    return _cache["p24"]


def _ens_direct():
    """1e5-path reference run with a t=0.5 snapshot (criteria 7, 9, 10)."""
    if "direct" not in _cache:
        _cache["direct"] = simulate(ACCEPT_CFG, snapshot_times=(0.5,))
    return _cache["direct"]


def _ens_halved():
    """Same driving noise at half the step size (criterion 7, CRN pair)."""
    if "halved" not in _cache:
        _cache["halved"] = simulate(replace(ACCEPT_CFG, h=5e-4))
    return _cache["halved"]


# ---------------------------------------------------------------------------

def test_criterion_1_normalization():
    with criterion(1, "profile mass is 1 to 1e-8 at t in {0.5, 1, 2} for "
                      "(d,p) in {(2,4),(3,4),(2,3.5)} + closed-form "
                      "cross-check", 5.0):
        for d, p in ((2, 4.0), (3, 4.0), (2, 3.5)):
            params = core.derive_params(d, p)
            area = core.sphere_area(d)
            for t in (0.5, 1.0, 2.0):
                edge = params.support_radius(t)
                mass = integrate_radial(
                    lambda r: core.density_radial(params, t, r)
                    * area * r ** (d - 1), 0.0, float(edge), tol=1e-11)
                assert abs(mass - 1.0) <= 1e-8, (d, p, t, mass)
        assert abs(core.c1_closed_form(2, 4.0) - _params24().c1) <= 1e-8


def test_criterion_2_field_oracles():
    with criterion(2, "gradient and drift match finite-difference oracles "
                      "to 1e-5 on 1000 interior probes", 5.0):
        params = _params24()
        rng = np.random.default_rng(42)
        eps = 1e-6
        for t in (0.5, 1.0, 2.0):
            edge = params.support_radius(t)
            radii = rng.uniform(0.1 * edge, 0.9 * edge, 334)
            dirs = rng.normal(size=(334, 2))
            dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
            x = radii[:, None] * dirs

            grad = core.gradient(params, t, x)
            drift = core.drift_b(params, t, x)
            g_fd = np.zeros_like(x)
            b_fd = np.zeros_like(x)
            for k in range(2):
                e = np.zeros(2)
                e[k] = eps
                g_fd[:, k] = (core.density(params, t, x + e)
                              - core.density(params, t, x - e)) / (2 * eps)
                b_fd[:, k] = (core.diffusion_a(params, t, x + e)
                              - core.diffusion_a(params, t, x - e)) / (2 * eps)
            assert np.max(np.abs(grad - g_fd)) / np.max(np.abs(grad)) <= 1e-5
            assert np.max(np.abs(drift - b_fd)) / np.max(np.abs(drift)) <= 1e-5


def test_criterion_3_exponent_inequalities():
    with criterion(3, "four exponent inequalities hold on the 20x20 "
                      "(d, p) grid and the reference coefficient is "
                      "time-integrable", 10.0):
        rep = exponents_check(n_grid=20)
        assert rep.passed
        assert integrability_check(_params24()).passed


def test_criterion_4_weak_form():
    with criterion(4, "weak-form residuals <= 1e-5 for 5 bump widths on "
                      "[0.5, 1], forms agree to 2e-5, drift-sign fault "
                      "detected", 30.0):
        rep = weakform_check(_params24())
        assert rep.passed
        bad = weakform_check(_params24(), fault="flip-drift-sign")
        assert not bad.passed


def test_criterion_5_nonlinear_fv():
    with criterion(5, "nonlinear solver from t=0.1 to t=1 tracks the "
                      "closed form: L1 <= 5e-3 at M=2000, decreasing over "
                      "M in {500, 1000, 2000}, mass to 1e-10", 120.0):
        rep = plaplace_check(_params24())
        assert rep.passed


def test_criterion_6_linearized_fv():
    with criterion(6, "linearized solver pinned to the delta=0.2 profile "
                      "over [0, 0.8]: L1 <= 5e-3, domination constant "
                      "1 +- 1e-6 for the exact profile", 120.0):
        rep = linearized_check(_params24())
        assert rep.passed
        row = next(r for r in rep.stats
                   if r["name"].startswith("minimal domination constant "
                                           "(exact"))
        assert abs(row["value"] - 1.0) <= 1e-6


def test_criterion_7_particle_law():
    with criterion(7, "1e5 particles (d=2, p=4, t0=0.05, h=1e-3): radial "
                      "KS at t=1 <= 0.015, KS improves within noise under "
                      "CRN h-halving, leakage beyond 1.05 R < 1%", 300.0):
        params = _params24()
        ens = _ens_direct()
        cdf = lambda rr: core.radial_mass(params, 1.0, rr)  # noqa: E731
        ks_h = stats.ks_statistic(ens.radii(), cdf)
        assert ks_h <= 0.015, ks_h

        # weakly monotone within statistical noise: with shared driving
        # noise the halved-step run may not beat a KS already at the
        # sampling floor, but it must not degrade beyond it
        ks_h2 = stats.ks_statistic(_ens_halved().radii(), cdf)
        slack = 0.5 * stats.ks_critical(ACCEPT_CFG.n_paths, 0.01)
        assert ks_h2 <= ks_h + slack, (ks_h2, ks_h, slack)

        for t in (0.5, 1.0):
            r = ens.radii() if t == 1.0 else ens.radii(t)
            leak = float(np.mean(r > 1.05 * params.support_radius(t)))
            assert leak < 0.01, (t, leak)


def test_criterion_8_wrong_diffusion_scaling_detected():
    with criterion(8, "running with sigma = sqrt(a) instead of sqrt(2a) "
                      "shifts the radial law by KS >= 0.1", 300.0):
        params = _params24()
        ens = simulate(replace(ACCEPT_CFG, diffusion_scale=1.0, seed=77))
        cdf = lambda rr: core.radial_mass(params, 1.0, rr)  # noqa: E731
        ks = stats.ks_statistic(ens.radii(), cdf)
        assert ks >= 0.1, ks


def test_criterion_9_restart_two_sample():
    with criterion(9, "fresh-noise restart from the t=0.5 state matches "
                      "the direct t=1 law: two-sample KS <= 0.02 at 1e5 "
                      "paths", 300.0):
        ens = _ens_direct()
        cont = restart(ens, ACCEPT_CFG.t_end, from_time=0.5)
        ks = stats.ks_statistic_two_sample(ens.radii(), cont.radii())
        assert ks <= 0.02, ks


def test_criterion_10_conditional_bins():
    with criterion(10, "per-radial-bin conditional restart passes 99% KS "
                       "in every bin (all bins >= 100 paths); an injected "
                       "radial shift fails", 600.0):
        rep = conditional_consistency_check(ACCEPT_CFG, 0.5,
                                            direct=_ens_direct())
        assert rep.passed
        assert not any("skipped" in row["name"] for row in rep.stats)
        assert sum("two-sample KS" in row["name"] for row in rep.stats) == 5
        bad = conditional_consistency_check(ACCEPT_CFG, 0.5, fault_bin=2,
                                            direct=_ens_direct())
        assert not bad.passed


def test_criterion_11_byte_identical_artifacts(tmp_path):
    with criterion(11, "identical manifests give byte-identical CSV/JSON "
                       "artifacts regardless of worker count", 120.0):
        runner = CliRunner()
        args = ["simulate", "--d", "2", "--p", "4", "--t0", "0.1",
                "--T", "0.4", "--h", "1e-3", "--paths", "4000",
                "--seed", "31", "--snapshots", "0.2"]
        out = {}
        for workers in (1, 4):
            dest = tmp_path / f"w{workers}"
            res = runner.invoke(cli.main, args + ["--workers", str(workers),
                                                  "--out", str(dest)])
            assert res.exit_code == 0, res.output
            out[workers] = ((dest / "ensemble.csv").read_bytes(),
                            (dest / "manifest.json").read_bytes())
        assert out[1] == out[4]

        reports = []
        for run in ("a", "b"):
            dest = tmp_path / f"rep-{run}"
            res = runner.invoke(cli.main, ["verify", "exponents",
                                           "--out", str(dest)])
            assert res.exit_code == 0, res.output
            reports.append((dest / "report.json").read_bytes())
        assert reports[0] == reports[1]
