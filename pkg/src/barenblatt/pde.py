"""Explicit finite-volume solvers on a radial grid.

Two equations share the discretization:

- the nonlinear parabolic p-Laplace equation
  ``du/dt = div(|grad u|^{p-2} grad u)``, and
- its linearization along the known self-similar solution,
  ``du/dt = div(rho(s, r) grad u)`` with
  ``rho = |grad w|^{p-2}`` evaluated from the closed form at physical time
  ``s`` (the self-similar solution itself solves this linear equation, which
  is what makes it a useful exactness test).

Both use two-point fluxes on face radii, zero flux at r = 0 (symmetry) and
at r_max, adaptive explicit time steps bounded by a CFL fraction of the
monotonicity limit, per-step mass tracking against the initial mass, and a
negativity guard: cells in [-1e-14 * max(u), 0) are clipped to zero and
counted, anything lower aborts.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import core
from ._kernels import get_backend

_STATUS_MSG = {
    1: "negative cell beyond clip tolerance",
    2: "state became non-finite",
}


class SolverAbort(RuntimeError):
    """Raised when an FV evolution leaves the admissible state set."""

    def __init__(self, status: int, steps: int, t_reached: float):
        self.status = status
        self.steps = steps
        self.t_reached = t_reached
        msg = _STATUS_MSG.get(status, f"kernel status {status}")
        super().__init__(f"{msg} after {steps} steps (t ~ {t_reached:.6g})")


class RadialGrid:
    """Uniform cell-centered grid on [0, r_max] with d-dimensional measure."""

    def __init__(self, d: int, r_max: float, m: int):
        if d < 1:
            raise ValueError("d must be >= 1")
        if m < 2:
            raise ValueError("need at least 2 cells")
        if not r_max > 0.0:
            raise ValueError("r_max must be positive")
        self.d = int(d)
        self.r_max = float(r_max)
        self.m = int(m)
        self.edges = np.linspace(0.0, self.r_max, self.m + 1)
        self.centers = 0.5 * (self.edges[:-1] + self.edges[1:])
        self.dr = self.r_max / self.m
        sigma = core.sphere_area(d)
        # the r=0 face value is irrelevant (flux pinned to zero); numpy's
        # 0**0 == 1 convention happens to give the right d=1 constant too
        self.areas = sigma * self.edges ** (d - 1)
        self.volumes = sigma * np.diff(self.edges ** d) / d

    def mass(self, u: np.ndarray) -> float:
        return float(np.asarray(u) @ self.volumes)

    def l1_distance(self, u: np.ndarray, v: np.ndarray) -> float:
        return float(np.abs(np.asarray(u) - np.asarray(v)) @ self.volumes)


def grid_for(params: core.BarenblattParams, s_max: float, m: int,
             margin: float = 1.1) -> RadialGrid:
    """Grid wide enough to hold the support up to physical time s_max."""
    return RadialGrid(params.d, margin * params.support_radius(s_max), m)


def profile_cell_averages(params: core.BarenblattParams, s: float,
                          grid: RadialGrid, n_gauss: int = 4) -> np.ndarray:
    """Volume averages of the profile at physical time s over grid cells."""
    nodes, weights = np.polynomial.legendre.leggauss(n_gauss)
    half = 0.5 * grid.dr
    pts = grid.centers[:, None] + half * nodes[None, :]
    vals = core.density_radial(params, s, pts.ravel()).reshape(pts.shape)
    sigma = core.sphere_area(grid.d)
    integrand = vals * pts ** (grid.d - 1)
    cell_int = sigma * half * (integrand * weights[None, :]).sum(axis=1)
    return cell_int / grid.volumes


@dataclass
class FvResult:
    grid: RadialGrid
    t_from: float
    t_final: float
    u: np.ndarray
    steps: int
    max_mass_dev: float
    clipped_cells: int
    mass0: float
    snapshots: dict[float, np.ndarray] = field(default_factory=dict)


def _run_legs(kernel_call, grid, u0, t_from, duration, snapshot_times):
    u = np.ascontiguousarray(u0, dtype=float).copy()
    if u.shape != (grid.m,):
        raise ValueError("u0 must have one value per cell")
    mass0 = grid.mass(u)
    if not mass0 > 0.0:
        raise ValueError("initial state must carry positive mass")
    marks = sorted(set(float(t) for t in snapshot_times))
    for t in marks:
        if t <= t_from or t > t_from + duration + 1e-12:
            raise ValueError(f"snapshot time {t!r} outside evolution window")
    legs = []
    prev = t_from
    for t in marks:
        legs.append((t - prev, t))
        prev = t
    legs.append((t_from + duration - prev, None))

    steps = 0
    max_dev = 0.0
    clips = 0
    t_cur = t_from
    snaps: dict[float, np.ndarray] = {}
    for leg_dt, mark in legs:
        if leg_dt > 0.0:
            status, st, dev, cl = kernel_call(u, t_cur, leg_dt, mass0)
            steps += st
            clips += cl
            max_dev = max(max_dev, dev)
            t_cur += leg_dt
            if status != 0:
                raise SolverAbort(status, steps, t_cur)
        if mark is not None:
            snaps[mark] = u.copy()
    return FvResult(grid=grid, t_from=t_from, t_final=t_from + duration, u=u,
                    steps=steps, max_mass_dev=max_dev, clipped_cells=clips,
                    mass0=mass0, snapshots=snaps)


def solve_plaplace(grid: RadialGrid, u0: np.ndarray, p: float,
                   duration: float, *, t_from: float = 0.0, cfl: float = 0.4,
                   backend: str | None = None,
                   snapshot_times: tuple[float, ...] = ()) -> FvResult:
    """Evolve the nonlinear p-Laplace equation for ``duration``."""
    if not p > 2.0:
        raise ValueError("solver covers the degenerate range p > 2")
    if not 0.0 < cfl < 1.0:
        raise ValueError("cfl must be in (0, 1)")
    kern = get_backend(backend)

    def call(u, t_cur, leg_dt, mass0):
        return kern.fv_plaplace_evolve(u, grid.areas, grid.volumes, grid.dr,
                                       p, leg_dt, cfl, mass0)

    return _run_legs(call, grid, u0, t_from, duration, snapshot_times)


def solve_linearized(grid: RadialGrid, u0: np.ndarray,
                     params: core.BarenblattParams, duration: float, *,
                     delta: float = 0.0, t_from: float = 0.0,
                     cfl: float = 0.4, backend: str | None = None,
                     snapshot_times: tuple[float, ...] = ()) -> FvResult:
    """Evolve the linearized equation; coefficients at physical s = delta + t."""
    if grid.d != params.d:
        raise ValueError("grid dimension does not match parameters")
    if not 0.0 < cfl < 1.0:
        raise ValueError("cfl must be in (0, 1)")
    if delta + t_from <= 0.0:
        raise ValueError("linearized coefficients need delta + t_from > 0")
    kern = get_backend(backend)
    p = params.p
    p1f = grid.edges ** (p / (p - 1.0))
    p2f = grid.edges ** ((p - 2.0) / (p - 1.0))

    def call(u, t_cur, leg_dt, mass0):
        return kern.fv_linear_evolve(u, grid.areas, grid.volumes, grid.dr,
                                     p1f, p2f, params.c1, params.q,
                                     params.kappa, params.a_coef,
                                     params.a_texp, delta + t_cur, leg_dt,
                                     cfl, mass0)

    return _run_legs(call, grid, u0, t_from, duration, snapshot_times)


def class_membership(u: np.ndarray, ref: np.ndarray, *,
                     rel_floor: float = 1e-9) -> float:
    """Smallest C with u <= C * ref where ref is meaningfully positive.

    Cells where ref is below rel_floor * max(ref) must carry no more than
    rel_floor * max(u); otherwise u escapes every multiple of ref and the
    result is inf.  For u == ref the result is exactly 1.
    """
    u = np.asarray(u, dtype=float)
    ref = np.asarray(ref, dtype=float)
    if u.shape != ref.shape:
        raise ValueError("shapes must match")
    inside = ref > rel_floor * ref.max()
    if np.any(u[~inside] > rel_floor * max(u.max(), 0.0)):
        return float("inf")
    return float((u[inside] / ref[inside]).max())


def save_radial_csv(path, result: FvResult):
    """Write radial states as CSV rows ``t,r,u`` (snapshots, then final)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t,r,u\n")
        times = sorted(result.snapshots) + [result.t_final]
        for t in times:
            u = result.snapshots.get(t, result.u)
            for r, v in zip(result.grid.centers, u):
                fh.write("%.17g,%.17g,%.17g\n" % (t, r, v))
