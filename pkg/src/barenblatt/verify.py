"""Verification checks: weak-form residuals, coefficient integrability,
flow/Markov consistency, distributional tests, and PDE-vs-closed-form
comparisons, each returning a :class:`CheckReport` that serializes to a
fixed JSON schema.

Conventions shared by all checks:

- every statistic is a row ``{name, value, tol, pass}`` and the report
  passes iff all rows pass;
- reports are pure functions of their inputs (and seed): no timestamps, no
  environment data, so identical inputs give byte-identical JSON;
- each checker accepts a fault-injection hook exercised by the test suite,
  guarding against vacuous passes.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import quad

from . import core, stats
from .pde import (class_membership, grid_for, profile_cell_averages,
                  solve_linearized, solve_plaplace)
from .sde import PathEnsemble, SimConfig, restart, simulate

DETERMINISTIC_TOL = 1e-5
FORMS_GAP_TOL = 2e-5
BUMP_FACTORS = (0.4, 0.7, 1.0, 1.5, 3.0)

# The path-law translation statement is about joint laws of whole paths;
# the desk test below asserts the radial two-time covariance that does hold
# and records that stronger path-level non-invariance is documented, not
# falsified, here.
CAVEAT_TRANSLATION = (
    "marginal and radial two-time laws are translation-covariant and are "
    "asserted statistically; non-invariance of the full path law under "
    "recentering is a statement about joint laws that this marginal-level "
    "test cannot falsify and is recorded as documentation only")

_BIG = 1e300


def _finite(v: float) -> float:
    v = float(v)
    if math.isnan(v):
        raise ValueError("statistic is NaN")
    return max(-_BIG, min(_BIG, v))


@dataclass
class CheckReport:
    """One check's outcome in the pinned report schema."""

    check: str
    params: dict
    stats: list[dict] = field(default_factory=list)
    seed: int | None = None
    caveat: str | None = None

    def add(self, name: str, value: float, tol: float, ok: bool) -> None:
        self.stats.append({"name": str(name), "value": _finite(value),
                           "tol": _finite(tol), "pass": bool(ok)})

    def add_upper(self, name: str, value: float, tol: float) -> None:
        self.add(name, value, tol, value <= tol)

    @property
    def passed(self) -> bool:
        return all(row["pass"] for row in self.stats)

    def to_dict(self) -> dict:
        obj = {"check": self.check, "params": self.params,
               "stats": self.stats, "seed": self.seed, "pass": self.passed}
        if self.caveat is not None:
            obj["caveat"] = self.caveat
        return obj

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n"


def _params_block(params: core.BarenblattParams, y=None, delta: float = 0.0) -> dict:
    if y is None:
        y = (0.0,) * params.d
    return {"d": params.d, "p": params.p, "delta": float(delta),
            "y": [float(v) for v in y]}


# ---------------------------------------------------------------------------
# scalar-fast closed-form fields (quadrature inner loops)
# ---------------------------------------------------------------------------

def make_scalar_fields(params: core.BarenblattParams):
    """Return ``f(s, r) -> (w, a, da, dw)`` evaluating the density, the
    diffusion coefficient, its radial derivative, and the density's radial
    derivative with plain-math scalars (quadratures call this pointwise;
    agreement with the vectorized evaluators is unit-tested).
    """
    d, p = params.d, params.p
    k, q, c1 = params.k, params.q, params.c1
    kappa = params.kappa
    shape = (p - 1.0) / (p - 2.0)
    a_coef, a_texp = params.a_coef, params.a_texp
    g_coef, g_texp = params.grad_coef, params.grad_texp
    dc1 = (p - 2.0) / (p - 1.0)
    dc2 = q * p / (p - 1.0)

    def fields(s: float, r: float):
        e = math.pow(r, 1.0 / (p - 1.0)) if r > 0.0 else 0.0
        g = c1 - q * math.pow(s, -kappa) * (r * e)
        if g <= 0.0 or r <= 0.0:
            if g <= 0.0:
                return 0.0, 0.0, 0.0, 0.0
            # exactly at the center: w is finite, a vanishes
            return math.pow(s, -k) * math.pow(g, shape), 0.0, 0.0, 0.0
        w = math.pow(s, -k) * math.pow(g, shape)
        big_a = a_coef * math.pow(s, -a_texp)
        a = big_a * g * (r / e)
        da = big_a * (dc1 * g / e - dc2 * math.pow(s, -kappa) * r)
        dw = -g_coef * math.pow(s, -g_texp) * math.pow(g, 1.0 / (p - 2.0)) * e
        return w, a, da, dw

    return fields


# ---------------------------------------------------------------------------
# smooth compactly supported radial test functions
# ---------------------------------------------------------------------------

class RadialBump:
    """psi(x) = phi(|x - c| / rho) with phi(s) = exp(1 - 1/(1-s^2)) on s < 1.

    phi(0) = 1, support is the closed ball of radius rho, and phi is C^inf;
    first and second radial derivatives are closed-form.
    """

    def __init__(self, rho: float, center=None):
        if not rho > 0.0:
            raise ValueError("rho must be positive")
        self.rho = float(rho)
        self.center = None if center is None else np.asarray(center, dtype=float)

    def _s(self, r):
        return np.asarray(r, dtype=float) / self.rho

    def value(self, r):
        s = self._s(r)
        inside = s < 1.0
        ss = np.where(inside, s, 0.5)
        out = np.where(inside, np.exp(1.0 - 1.0 / (1.0 - ss * ss)), 0.0)
        return out if out.ndim else float(out)

    def d1(self, r):
        """d psi / d r."""
        s = self._s(r)
        inside = s < 1.0
        ss = np.where(inside, s, 0.5)
        om = 1.0 - ss * ss
        phi = np.exp(1.0 - 1.0 / om)
        out = np.where(inside, phi * (-2.0 * ss / om ** 2) / self.rho, 0.0)
        return out if out.ndim else float(out)

    def laplacian(self, r, d: int):
        """Laplacian of psi at radius r in dimension d (finite at r = 0)."""
        s = self._s(r)
        inside = s < 1.0
        ss = np.where(inside, s, 0.5)
        om = 1.0 - ss * ss
        phi = np.exp(1.0 - 1.0 / om)
        d2 = phi * (4.0 * ss * ss / om ** 4 - 2.0 * (1.0 + 3.0 * ss * ss) / om ** 3)
        d1_over_r = phi * (-2.0 / om ** 2)   # phi'(s)/s, finite at s=0
        out = np.where(inside, (d2 + (d - 1) * d1_over_r) / self.rho ** 2, 0.0)
        return out if out.ndim else float(out)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        c = self.center if self.center is not None else np.zeros(x.shape[-1])
        return self.value(np.linalg.norm(x - c, axis=-1))


def bump_family(params: core.BarenblattParams, t2: float, *,
                delta: float = 0.0, factors=BUMP_FACTORS) -> list[RadialBump]:
    """Radial bumps centered at the profile's center with radii set by the
    support size at the window's end."""
    r_ref = params.support_radius(delta + t2)
    return [RadialBump(f * r_ref) for f in factors]


# ---------------------------------------------------------------------------
# weak-form residuals
# ---------------------------------------------------------------------------

def _quad(f, lo, hi, tol):
    val, _ = quad(f, lo, hi, epsabs=tol, epsrel=tol, limit=200)
    return val


def weakform_residuals(params: core.BarenblattParams, bump: RadialBump,
                       t1: float, t2: float, *, delta: float = 0.0,
                       fault: str | None = None, quad_tol: float = 1e-10) -> dict:
    """Residuals of the two weak formulations over the window [t1, t2].

    Generator form: d/dt int psi w = int (a Lap(psi) + grad(a).grad(psi)) w.
    Divergence form: d/dt int psi w = -int |grad w|^{p-2} grad w . grad psi.
    Both vanish identically for the closed-form solution; what is measured
    is quadrature error.  ``fault="flip-drift-sign"`` corrupts the gradient
    term of the generator form, which must produce an O(1e-2) residual.
    """
    if not 0.0 < t1 < t2:
        raise ValueError("need 0 < t1 < t2")
    if fault not in (None, "flip-drift-sign"):
        raise ValueError(f"unknown fault {fault!r}")
    sign = -1.0 if fault == "flip-drift-sign" else 1.0
    d = params.d
    sigma = core.sphere_area(d)
    fields = make_scalar_fields(params)
    s1, s2 = delta + t1, delta + t2

    def hi_of(s):
        return min(params.support_radius(s), bump.rho)

    def mass_at(s):
        def f(r):
            w = fields(s, r)[0]
            return bump.value(r) * w * sigma * r ** (d - 1)
        return _quad(f, 0.0, hi_of(s), quad_tol)

    def generator_term(s):
        def f(r):
            w, a, da, _ = fields(s, r)
            return ((a * bump.laplacian(r, d) + sign * da * bump.d1(r))
                    * w * sigma * r ** (d - 1))
        return _quad(f, 0.0, hi_of(s), quad_tol)

    def divergence_term(s):
        def f(r):
            _, a, _, dw = fields(s, r)
            return a * dw * bump.d1(r) * sigma * r ** (d - 1)
        return _quad(f, 0.0, hi_of(s), quad_tol)

    dmass = mass_at(s2) - mass_at(s1)
    gen = _quad(generator_term, s1, s2, quad_tol * 10)
    div = _quad(divergence_term, s1, s2, quad_tol * 10)
    res_gen = abs(dmass - gen)
    res_div = abs(dmass + div)
    return {"residual_fpe": res_gen, "residual_divergence": res_div,
            "forms_gap": abs(res_gen - res_div), "mass_change": dmass}


def weakform_check(params: core.BarenblattParams, *, t1: float = 0.5,
                   t2: float = 1.0, delta: float = 0.0,
                   factors=BUMP_FACTORS, fault: str | None = None,
                   tol: float = DETERMINISTIC_TOL,
                   gap_tol: float = FORMS_GAP_TOL) -> CheckReport:
    rep = CheckReport("weakform", _params_block(params, delta=delta))
    for f, bump in zip(factors, bump_family(params, t2, delta=delta,
                                            factors=factors)):
        res = weakform_residuals(params, bump, t1, t2, delta=delta, fault=fault)
        rep.add_upper(f"generator-form residual (rho={f} R)",
                      res["residual_fpe"], tol)
        rep.add_upper(f"divergence-form residual (rho={f} R)",
                      res["residual_divergence"], tol)
        rep.add_upper(f"forms gap (rho={f} R)", res["forms_gap"], gap_tol)
    return rep


def initial_condition_check(params: core.BarenblattParams, *,
                            rho: float = 1.0,
                            times=(1e-2, 1e-3, 1e-4)) -> CheckReport:
    """As t -> 0 the profile integrates a test function to its center value
    (unit-mass concentration); checked as a decreasing-error trend."""
    rep = CheckReport("initial-condition", _params_block(params))
    bump = RadialBump(rho)
    d = params.d
    sigma = core.sphere_area(d)
    fields = make_scalar_fields(params)
    errs = []
    for t in sorted(times, reverse=True):
        def f(r):
            return bump.value(r) * fields(t, r)[0] * sigma * r ** (d - 1)
        hi = min(params.support_radius(t), rho)
        val = _quad(f, 0.0, hi, 1e-12)
        errs.append((t, abs(val - 1.0)))
    for i, (t, e) in enumerate(errs):
        bound = 1.0 if i == 0 else errs[i - 1][1]
        rep.add(f"|int psi w({t:g}) - psi(center)|", e, bound, e < bound)
    return rep


# ---------------------------------------------------------------------------
# integrability of the coefficient pair near t = 0
# ---------------------------------------------------------------------------

def integrability_check(params: core.BarenblattParams, t_end: float = 1.0, *,
                        fault: str | None = None, max_depth: int = 60,
                        rel_tol: float = 1e-9,
                        ratio_margin: float = 0.98) -> CheckReport:
    """Graded-quadrature verdict on int_0^T int (a + |grad a|) w dx dt.

    Time panels [T 2^{-j-1}, T 2^{-j}] shrink geometrically toward the
    singular endpoint; a power-law integrand s^alpha makes panel values
    geometric with ratio 2^{-(alpha+1)}, so convergence (alpha > -1) shows
    as a stable ratio < 1 and the tail is bounded by a geometric series.
    ``fault="steepen-time-singularity"`` multiplies the time integrand by
    (T/s)^{1.1}, pushing any alpha in (-1, 0] below -1: the verdict must
    flip to divergent.
    """
    if fault not in (None, "steepen-time-singularity"):
        raise ValueError(f"unknown fault {fault!r}")
    if not t_end > 0.0:
        raise ValueError("t_end must be positive")
    d = params.d
    sigma = core.sphere_area(d)
    fields = make_scalar_fields(params)

    def time_integrand(s):
        def f(r):
            w, a, da, _ = fields(s, r)
            return (a + abs(da)) * w * sigma * r ** (d - 1)
        val = _quad(f, 0.0, params.support_radius(s), 1e-11)
        if fault == "steepen-time-singularity":
            val *= (t_end / s) ** 1.1
        return val

    panels = []
    total = 0.0
    diverged = False
    rising = 0
    for j in range(max_depth):
        lo, hi = t_end * 2.0 ** -(j + 1), t_end * 2.0 ** -j
        v = _quad(time_integrand, lo, hi, 1e-11)
        panels.append(v)
        total += v
        if j > 0 and panels[-2] > 0.0:
            rising = rising + 1 if v >= panels[-2] else 0
            if rising >= 3:
                diverged = True
                break
        if total > 0.0 and v < rel_tol * total:
            break

    ratios = [panels[i + 1] / panels[i] for i in range(len(panels) - 1)
              if panels[i] > 0.0]
    tail_ratio = float(np.median(ratios[-5:])) if ratios else 0.0
    finite = (not diverged) and tail_ratio < ratio_margin
    if finite and panels and tail_ratio > 0.0:
        total += panels[-1] * tail_ratio / (1.0 - tail_ratio)

    rep = CheckReport("integrability", _params_block(params))
    rep.add("tail panel ratio", tail_ratio, ratio_margin,
            finite)
    rep.add("coefficient time-integral on (0, %g]" % t_end,
            total if finite else _BIG, _BIG, finite)
    rep.add("graded panels used", float(len(panels)), float(max_depth),
            len(panels) <= max_depth)
    return rep


def exponents_check(*, d_lo: float = 1.0, d_hi: float = 5.0,
                    p_lo: float = 2.0, p_hi: float = 6.0,
                    n_grid: int = 20,
                    reference: tuple[int, float] = (2, 4.0)) -> CheckReport:
    """Strict positivity of the four exponent margins on an n x n (d, p)
    grid (p endpoint included, p_lo excluded) plus one reference pair."""
    ref = core.derive_params(*reference)
    rep = CheckReport("exponents", _params_block(ref))
    ds = np.linspace(d_lo, d_hi, n_grid)
    ps = np.linspace(p_lo, p_hi, n_grid + 1)[1:]
    worst: dict[str, float] = {}
    for dv in ds:
        for pv in ps:
            for row in core.exponent_margins(float(dv), float(pv)):
                m = row["margin"]
                if row["name"] not in worst or m < worst[row["name"]]:
                    worst[row["name"]] = m
    for name, m in worst.items():
        rep.add(f"min margin over grid: {name}", m, 0.0, m > 0.0)
    for row in core.check_exponents(ref):
        rep.add(f"reference exponent: {row['name']}", row["exponent"],
                row["bound"], row["holds"])
    return rep


# ---------------------------------------------------------------------------
# flow property
# ---------------------------------------------------------------------------

def flow_analytic_check(params: core.BarenblattParams, *, s: float = 0.1,
                        r: float = 0.4, t: float = 1.0, delta: float = 0.2,
                        n_probes: int = 9, fault_shift: float = 0.0,
                        tol: float = 1e-14) -> CheckReport:
    """Two-stage versus direct time-offset bookkeeping at probe radii.

    Starting at time s from the profile with offset delta and flowing to t
    directly gives physical time delta + (t - s); stopping at r and
    restarting gives (delta + (r - s)) + (t - r).  Both describe the same
    density; the check exercises the offset algebra (and, with
    ``fault_shift``, must detect a misaligned offset).
    """
    if not s <= r <= t:
        raise ValueError("need s <= r <= t")
    direct = delta + (t - s)
    staged = (delta + (r - s)) + (t - r) + fault_shift
    radius = params.support_radius(min(direct, staged))
    probes = np.linspace(0.0, 0.98 * radius, n_probes + 1)[1:]
    wa = core.density_radial(params, direct, probes)
    wb = core.density_radial(params, staged, probes)
    scale = core.density_radial(params, direct, np.zeros(1))[0]
    mismatch = float(np.max(np.abs(wa - wb)) / scale)
    rep = CheckReport("flow-analytic",
                      _params_block(params, delta=delta))
    rep.add_upper("staged vs direct density mismatch (rel)", mismatch, tol)
    return rep


def flow_ensemble_check(config: SimConfig, t_mid: float, *,
                        tol: float = 0.02,
                        direct: PathEnsemble | None = None) -> CheckReport:
    """Restart invariance: a fresh-noise restart at t_mid must reproduce the
    direct run's time-t_end radial law (two-sample KS)."""
    if direct is None:
        direct = simulate(config)
    half = simulate(replace(config, t_end=float(t_mid)), params=direct.params)
    cont = restart(half, config.t_end)
    ks = stats.ks_statistic_two_sample(direct.radii(), cont.radii())
    rep = CheckReport("flow-ensemble",
                      _params_block(direct.params, y=config.y,
                                    delta=config.delta),
                      seed=config.seed)
    rep.add_upper(f"restart-vs-direct two-sample KS at t={config.t_end:g}",
                  ks, tol)
    return rep


# ---------------------------------------------------------------------------
# Markov conditional consistency
# ---------------------------------------------------------------------------

def conditional_consistency_check(config: SimConfig, t_mid: float, *,
                                  n_bins: int = 5, min_bin: int = 100,
                                  alpha: float = 0.01,
                                  fault_bin: int | None = None,
                                  fault_shift: float = 0.5,
                                  direct: PathEnsemble | None = None) -> CheckReport:
    """Per-radial-bin two-time conditional test.

    Paths are binned by radius at t_mid; a fresh-noise ensemble restarted
    from the exact t_mid positions must show the same time-t_end radial law
    bin by bin (the conditional kernel depends only on the state, not on
    the noise segment or the history).  Bins holding fewer than ``min_bin``
    paths are flagged and skipped.  ``fault_bin`` shifts that bin's restart
    radii outward by ``fault_shift``, which must fail that bin's test.
    """
    if direct is None:
        direct = simulate(config, snapshot_times=(t_mid,))
    if t_mid not in direct.snapshots:
        raise ValueError("direct ensemble lacks the t_mid snapshot")
    params = direct.params
    y = np.asarray(config.y, dtype=float)
    x_mid = direct.snapshots[t_mid]
    rel = x_mid - y[None, :]
    r_mid = np.linalg.norm(rel, axis=1)
    r_edge = params.support_radius(config.delta + t_mid)
    edges = np.linspace(0.0, r_edge, n_bins + 1)

    x0 = x_mid
    if fault_bin is not None:
        if not 0 <= fault_bin < n_bins:
            raise ValueError("fault_bin out of range")
        sel = (r_mid >= edges[fault_bin]) & (r_mid < edges[fault_bin + 1])
        x0 = x_mid.copy()
        safe = np.where(r_mid[sel] > 0.0, r_mid[sel], 1.0)
        x0[sel] = y[None, :] + rel[sel] * (
            (r_mid[sel] + fault_shift) / safe)[:, None]
    cond = restart(direct, config.t_end, from_time=t_mid, x0_override=x0)

    r_direct = direct.radii()
    r_cond = cond.radii()
    caveat = None
    if not params.markov_admissible:
        caveat = ("parameters are outside the admissible range for the "
                  "state-dependence property; this run checks simulator "
                  "consistency only and asserts nothing stronger")
    rep = CheckReport("markov-conditional",
                      _params_block(params, y=config.y, delta=config.delta),
                      seed=config.seed, caveat=caveat)
    outside = int((r_mid >= r_edge).sum())
    rep.add("paths beyond the binned support range", float(outside),
            max(1.0, 0.01 * len(r_mid)), outside <= 0.01 * len(r_mid))
    for k in range(n_bins):
        mask = (r_mid >= edges[k]) & (r_mid < edges[k + 1])
        nk = int(mask.sum())
        label = f"bin {k} [{edges[k]:.3g},{edges[k+1]:.3g})"
        if nk < min_bin:
            rep.add(f"{label} skipped (n={nk} < {min_bin})", float(nk),
                    float(min_bin), True)
            continue
        ks = stats.ks_statistic_two_sample(r_direct[mask], r_cond[mask])
        crit = stats.ks_critical_two_sample(nk, nk, alpha)
        rep.add_upper(f"{label} two-sample KS (n={nk})", ks, crit)
    return rep


# ---------------------------------------------------------------------------
# translation covariance (marginal/two-time-radial level)
# ---------------------------------------------------------------------------

def translation_check(config: SimConfig, t_mid: float, *,
                      grid: int = 256, tol_2d: float = 0.03,
                      probe_tol: float = 1e-13,
                      params: core.BarenblattParams | None = None) -> CheckReport:
    """Recentering covariance at the level this toolkit can falsify.

    Deterministic part: the density with center y at x + y equals the
    centered density at x (probe points).  Statistical part: the joint law
    of radii at (t_mid, t_end) matches between a run centered at y and an
    independently seeded run centered at 0 (binned 2-D two-sample KS).
    The report always carries the path-law caveat string.
    """
    if params is None:
        params = core.derive_params(config.d, config.p)
    if not params.markov_admissible:
        raise ValueError("translation check expects markov-admissible parameters")
    y = np.asarray(config.y, dtype=float)
    if not np.any(y != 0.0):
        raise ValueError("translation check needs a center y != 0")

    rng = np.random.default_rng(config.seed)
    s_probe = config.delta + config.t_end
    probes = rng.uniform(-1.0, 1.0, size=(64, config.d)) \
        * params.support_radius(s_probe)
    w_y = core.density(params, s_probe, probes + y[None, :], y=y)
    w_0 = core.density(params, s_probe, probes)
    scale = core.density_radial(params, s_probe, np.zeros(1))[0]
    probe_err = float(np.max(np.abs(w_y - w_0)) / scale)

    ens_y = simulate(config, snapshot_times=(t_mid,), params=params)
    cfg0 = replace(config, y=(0.0,) * config.d, seed=config.seed + 1)
    ens_0 = simulate(cfg0, snapshot_times=(t_mid,), params=params)
    joint_y = np.column_stack([ens_y.radii(t_mid), ens_y.radii()])
    joint_0 = np.column_stack([ens_0.radii(t_mid), ens_0.radii()])
    d2 = stats.ks_statistic_2d(joint_y, joint_0, grid=grid)

    rep = CheckReport("translation-covariance",
                      _params_block(params, y=config.y, delta=config.delta),
                      seed=config.seed, caveat=CAVEAT_TRANSLATION)
    rep.add_upper("recentered density probe mismatch (rel)", probe_err,
                  probe_tol)
    rep.add_upper(f"two-time radial joint 2-D KS (grid={grid})", d2, tol_2d)
    return rep


# ---------------------------------------------------------------------------
# marginal-law and support checks (SDE side)
# ---------------------------------------------------------------------------

def marginals_check(config: SimConfig, *, times: tuple[float, ...] = (),
                    alpha: float = 0.01, ks_tol: float | None = None,
                    ens: PathEnsemble | None = None) -> CheckReport:
    """Empirical radial CDF vs the closed form at snapshot times, plus
    angular uniformity in the plane."""
    if ens is None:
        ens = simulate(config, snapshot_times=times)
    params = ens.params
    rep = CheckReport("marginals",
                      _params_block(params, y=config.y, delta=config.delta),
                      seed=config.seed)
    crit = stats.ks_critical(config.n_paths, alpha)
    tol = crit if ks_tol is None else ks_tol
    marks = sorted(set(times)) + [ens.t_final]
    for t in marks:
        r = ens.radii(None if t == ens.t_final else t)
        s = config.delta + t
        d = stats.ks_statistic(r, lambda rr: core.radial_mass(params, s, rr))
        rep.add_upper(f"radial KS vs closed form at t={t:g} (n={r.size})",
                      d, tol)
    if config.d == 2 and config.n_paths >= 180:
        y = np.asarray(config.y)
        res = stats.angular_uniformity_chi2(ens.x - y[None, :], alpha=alpha)
        rep.add(f"angular chi-square ({res['n_bins']} bins)",
                res["statistic"], res["critical"], res["pass"])
    return rep


def support_check(config: SimConfig, *, margin: float = 1.05,
                  max_leak: float = 0.01, times: tuple[float, ...] = (),
                  ens: PathEnsemble | None = None) -> CheckReport:
    """Fraction of paths beyond margin * R(physical time) stays small.

    The free boundary is not enforced by the scheme, so small overshoot is
    expected and measured; ``margin=0`` is the documented fault injection
    (every path counts as leaked, the check must fail).
    """
    if ens is None:
        ens = simulate(config, snapshot_times=times)
    params = ens.params
    rep = CheckReport("support",
                      _params_block(params, y=config.y, delta=config.delta),
                      seed=config.seed)
    marks = sorted(set(times)) + [ens.t_final]
    for t in marks:
        r = ens.radii(None if t == ens.t_final else t)
        bound = margin * params.support_radius(config.delta + t)
        leak = float((r > bound).mean())
        rep.add_upper(f"leakage fraction beyond {margin:g} R at t={t:g}",
                      leak, max_leak)
    return rep


def convergence_check(config: SimConfig, *, levels: int = 2,
                      alpha: float = 0.01,
                      slack_factor: float = 0.5) -> CheckReport:
    """KS distance to the closed form must not degrade under step halving
    with common random numbers (shared Brownian path via the fine grid)."""
    if levels < 2:
        raise ValueError("need at least two step levels")
    finest = config.h / 2 ** (levels - 1)
    params = core.derive_params(config.d, config.p)
    rep = CheckReport("step-convergence",
                      _params_block(params, y=config.y, delta=config.delta),
                      seed=config.seed)
    slack = slack_factor * stats.ks_critical(config.n_paths, alpha)
    prev = None
    for lev in range(levels):
        h = config.h / 2 ** lev
        cfg = replace(config, h=h, noise_h=finest)
        ens = simulate(cfg, params=params)
        s = config.delta + ens.t_final
        ks = stats.ks_statistic(
            ens.radii(), lambda rr: core.radial_mass(params, s, rr))
        if prev is None:
            rep.add(f"radial KS at h={h:g}", ks, 1.0, ks < 1.0)
        else:
            rep.add(f"radial KS at h={h:g} (vs h={2*h:g} + slack)", ks,
                    prev + slack, ks <= prev + slack)
        prev = ks
    return rep


# ---------------------------------------------------------------------------
# PDE-vs-closed-form checks
# ---------------------------------------------------------------------------

def plaplace_check(params: core.BarenblattParams, *, start: float = 0.1,
                   t_end: float = 1.0, cells=(500, 1000, 2000),
                   l1_tol: float = 5e-3, mass_tol: float = 1e-10,
                   cfl: float = 0.4, backend: str | None = None) -> CheckReport:
    """Nonlinear solve from the profile at ``start`` against the profile at
    ``t_end``: L1 accuracy at the finest grid, decreasing error under
    refinement, mass conservation, and an empty clip log."""
    rep = CheckReport("plaplace-vs-closed-form", _params_block(params))
    errs = []
    for m in cells:
        grid = grid_for(params, t_end, int(m))
        u0 = profile_cell_averages(params, start, grid)
        res = solve_plaplace(grid, u0, params.p, t_end - start,
                             t_from=start, cfl=cfl, backend=backend)
        ref = profile_cell_averages(params, t_end, grid)
        err = grid.l1_distance(res.u, ref)
        errs.append(err)
        rep.add_upper(f"L1 error vs closed form (M={m})", err, l1_tol)
        rep.add_upper(f"max relative mass deviation (M={m})",
                      res.max_mass_dev, mass_tol)
        rep.add(f"clipped cells (M={m})", float(res.clipped_cells), 0.0,
                res.clipped_cells == 0)
    for i in range(1, len(errs)):
        rep.add(f"refinement decreases L1 (M={cells[i-1]} -> {cells[i]})",
                errs[i], errs[i - 1], errs[i] < errs[i - 1])
    return rep


def linearized_check(params: core.BarenblattParams, *, delta: float = 0.2,
                     duration: float = 0.8, cells: int = 2000,
                     l1_tol: float = 5e-3, mass_tol: float = 1e-10,
                     class_tol: float = 1e-6, n_snapshots: int = 4,
                     cfl: float = 0.4, backend: str | None = None) -> CheckReport:
    """Linearized solve from the delta-offset profile against its closed
    form at every snapshot, plus the minimal-domination-constant check."""
    rep = CheckReport("linearized-vs-closed-form",
                      _params_block(params, delta=delta))
    grid = grid_for(params, delta + duration, int(cells))
    u0 = profile_cell_averages(params, delta, grid)
    marks = tuple(duration * (i + 1) / n_snapshots for i in range(n_snapshots - 1))
    res = solve_linearized(grid, u0, params, duration, delta=delta,
                           cfl=cfl, backend=backend, snapshot_times=marks)
    for t in list(marks) + [duration]:
        u = res.snapshots.get(t, res.u)
        ref = profile_cell_averages(params, delta + t, grid)
        rep.add_upper(f"L1 error vs closed form at t={t:g}",
                      grid.l1_distance(u, ref), l1_tol)
    rep.add_upper("max relative mass deviation", res.max_mass_dev, mass_tol)
    rep.add("clipped cells", float(res.clipped_cells), 0.0,
            res.clipped_cells == 0)
    ref_end = profile_cell_averages(params, delta + duration, grid)
    c_exact = class_membership(ref_end, ref_end)
    rep.add("minimal domination constant (exact vs itself)", c_exact,
            1.0 + class_tol, abs(c_exact - 1.0) <= class_tol)
    c_num = class_membership(res.u, ref_end)
    rep.add("minimal domination constant (numeric vs exact)", c_num, 1.1,
            np.isfinite(c_num) and c_num <= 1.1)
    return rep
