"""Tamed Euler-Maruyama simulation of the self-similar nonlinear diffusion.

The process solves, in law, the McKean-Vlasov equation whose coefficients
are the closed-form fields of :mod:`barenblatt.core` evaluated along the
known self-similar density: diffusion matrix ``diffusion_scale * a(s, r)``
times identity and radial drift ``lambda(s, r) (x - y)``, at physical time
``s = delta + t``.

Two start modes:

- ``delta > 0``: the time origin carries the smoothed profile at physical
  time ``delta``; simulation starts at t = 0.
- ``delta == 0``: the time origin is a point mass at the center.  The drift
  is singular there, so simulation warm-starts at ``t_start > 0`` from the
  exact profile, which is what the point mass evolves into.

Randomness is counter-based (see :mod:`barenblatt.numerics`): path ``i`` of
segment ``g`` draws from the stream ``SEGMENT_STRIDE * (g+1) + i`` under the
run seed, and white-noise increments are indexed by (fine step, dimension).
Consequences, all load-bearing for the verification suites: trajectories do
not depend on ensemble size, worker count, or snapshot placement; runs with
step h and h/2 share one Brownian path when ``noise_h`` divides both; a
restart can either replay a run's own noise (``reuse_streams=True``) or
draw a fresh segment.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import core
from ._kernels import get_backend
from .numerics import RngStream, stream_key, sample_barenblatt

SEGMENT_STRIDE = 2 ** 33
_INIT_STREAM_OFFSET = 2 ** 32  # sampling streams, clear of path ids
_MAX_PATHS = 2 ** 31
_ALIGN_TOL = 1e-9


@dataclass(frozen=True)
class SimConfig:
    """Full description of a simulation run (everything but worker layout).

    ``n_workers`` and ``chunk_size`` are execution details: results are
    byte-identical for any values, so they are excluded from manifests.
    """

    d: int
    p: float
    y: tuple[float, ...] = ()
    delta: float = 0.0
    t_start: float = 0.05
    t_end: float = 1.0
    h: float = 1e-3
    noise_h: float | None = None
    n_paths: int = 10_000
    seed: int = 0
    diffusion_scale: float = 2.0
    bmax: float = 1e3
    backend: str | None = None
    n_workers: int = 1
    chunk_size: int = 16384

    def __post_init__(self):
        if not len(self.y):
            object.__setattr__(self, "y", (0.0,) * self.d)
        object.__setattr__(self, "y", tuple(float(v) for v in self.y))
        if len(self.y) != self.d:
            raise ValueError("y must have d components")
        if self.delta < 0.0:
            raise ValueError("delta must be >= 0")
        if self.delta == 0.0 and not self.t_start > 0.0:
            raise ValueError("point-mass start needs a warm start t_start > 0")
        if not self.h > 0.0:
            raise ValueError("h must be positive")
        if not (0 < self.n_paths < _MAX_PATHS):
            raise ValueError("n_paths out of range")
        if self.t_end < self.t_begin - _ALIGN_TOL:
            raise ValueError("t_end precedes the simulation start")
        m = self.m_sub  # validates divisibility
        if m < 1:
            raise ValueError("noise_h must not exceed h")
        if self.diffusion_scale <= 0.0:
            raise ValueError("diffusion_scale must be positive")
        if self.bmax <= 0.0:
            raise ValueError("bmax must be positive")
        if self.n_workers < 1 or self.chunk_size < 1:
            raise ValueError("n_workers and chunk_size must be >= 1")

    @property
    def t_begin(self) -> float:
        return 0.0 if self.delta > 0.0 else self.t_start

    @property
    def m_sub(self) -> int:
        if self.noise_h is None:
            return 1
        m = int(round(self.h / self.noise_h))
        if m < 1 or abs(self.h - m * self.noise_h) > _ALIGN_TOL * self.h:
            raise ValueError("noise_h must divide h")
        return m

    def manifest_dict(self) -> dict:
        return {
            "d": self.d, "p": self.p, "y": list(self.y),
            "delta": self.delta, "t_start": self.t_start,
            "t_end": self.t_end, "h": self.h,
            "noise_h": self.h / self.m_sub,
            "n_paths": self.n_paths, "seed": self.seed,
            "diffusion_scale": self.diffusion_scale, "bmax": self.bmax,
        }


@dataclass
class PathEnsemble:
    """Simulation output: final state, snapshots, and enough bookkeeping to
    restart (with either replayed or fresh noise)."""

    config: SimConfig
    params: core.BarenblattParams
    backend_name: str
    segment: int
    t_begin: float
    t_final: float
    fine_origin: int                   # fine-step counter at t_begin
    fine_consumed: int                 # fine-step counter at t_final
    x: np.ndarray                      # (n, d) final positions
    keys: np.ndarray                   # (n,) uint64 per-path stream keys
    snapshots: dict[float, np.ndarray] = field(default_factory=dict)

    def radii(self, t: float | None = None) -> np.ndarray:
        """Distances to the center at snapshot time t (default: final)."""
        pos = self.x if t is None else self.snapshots[t]
        y = np.asarray(self.config.y)
        return np.linalg.norm(pos - y[None, :], axis=1)

    def physical_time(self, t: float | None = None) -> float:
        return self.config.delta + (self.t_final if t is None else t)


def _aligned_steps(t_from: float, t_to: float, h: float, what: str) -> int:
    n = int(round((t_to - t_from) / h))
    if n < 0 or abs(t_to - t_from - n * h) > _ALIGN_TOL:
        raise ValueError(
            f"{what} {t_to!r} is not on the step grid (start {t_from!r}, h {h!r})")
    return n


def _path_keys(seed: int, segment: int, n: int) -> np.ndarray:
    base = np.uint64(SEGMENT_STRIDE * (segment + 1))
    ids = base + np.arange(n, dtype=np.uint64)
    return stream_key(seed, ids)


def _init_rng(seed: int, segment: int) -> RngStream:
    return RngStream(seed, SEGMENT_STRIDE * (segment + 1) + _INIT_STREAM_OFFSET)


def simulate(config: SimConfig, snapshot_times: tuple[float, ...] = (),
             *, params: core.BarenblattParams | None = None,
             segment: int = 0,
             x0: np.ndarray | None = None,
             keys: np.ndarray | None = None,
             fine_offset: int = 0,
             t_begin: float | None = None) -> PathEnsemble:
    """Run the ensemble from its start mode to ``config.t_end``.

    The keyword group (segment, x0, keys, fine_offset, t_begin) is the
    restart interface used by :func:`restart`; plain calls leave it alone.
    Snapshot times must sit on the step grid.
    """
    if params is None:
        params = core.derive_params(config.d, config.p)
    kern = get_backend(config.backend)
    t0 = config.t_begin if t_begin is None else t_begin
    n = config.n_paths
    y = np.asarray(config.y, dtype=float)

    if keys is None:
        keys = _path_keys(config.seed, segment, n)
    if x0 is None:
        s0 = config.delta + t0
        x = sample_barenblatt(params, y, s0, n, _init_rng(config.seed, segment))
    else:
        if x0.shape != (n, config.d):
            raise ValueError("x0 shape does not match (n_paths, d)")
        x = np.ascontiguousarray(x0, dtype=float).copy()

    total_steps = _aligned_steps(t0, config.t_end, config.h, "t_end")
    marks = sorted(set(float(t) for t in snapshot_times))
    for t in marks:
        if t < t0 - _ALIGN_TOL or t > config.t_end + _ALIGN_TOL:
            raise ValueError(f"snapshot time {t!r} outside [{t0}, {config.t_end}]")
    legs = []  # (n_steps, snapshot time or None)
    prev = 0
    for t in marks:
        k = _aligned_steps(t0, t, config.h, "snapshot time")
        legs.append((k - prev, t))
        prev = k
    legs.append((total_steps - prev, None))

    m_sub = config.m_sub
    p = params.p
    coef = dict(p=p, c1=params.c1, q=params.q, kappa=params.kappa,
                a_coef=params.a_coef, a_texp=params.a_texp,
                dc1=(p - 2.0) / (p - 1.0), dc2=params.q * p / (p - 1.0),
                bmax=config.bmax, diff_scale=config.diffusion_scale)

    snaps: dict[float, np.ndarray] = {}
    for _, t in legs:
        if t is not None:
            snaps[t] = np.empty_like(x)

    def run_block(lo: int, hi: int) -> None:
        xb = x[lo:hi]
        kb = keys[lo:hi]
        steps_done = 0
        for n_steps, t_mark in legs:
            if n_steps:
                kern.em_evolve(
                    xb, kb, y,
                    t0=config.delta + t0 + steps_done * config.h,
                    h=config.h, n_steps=n_steps, m_sub=m_sub,
                    fine_offset=fine_offset + steps_done * m_sub, **coef)
                steps_done += n_steps
            if t_mark is not None:
                snaps[t_mark][lo:hi] = xb

    blocks = [(lo, min(lo + config.chunk_size, n))
              for lo in range(0, n, config.chunk_size)]
    if config.n_workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=config.n_workers) as pool:
            list(pool.map(lambda b: run_block(*b), blocks))
    else:
        for b in blocks:
            run_block(*b)

    return PathEnsemble(
        config=config, params=params, backend_name=kern.BACKEND_NAME,
        segment=segment, t_begin=t0, t_final=config.t_end,
        fine_origin=fine_offset,
        fine_consumed=fine_offset + total_steps * m_sub,
        x=x, keys=keys, snapshots=snaps)


def restart(ens: PathEnsemble, t_end: float,
            snapshot_times: tuple[float, ...] = (),
            *, reuse_streams: bool = False,
            from_time: float | None = None,
            x0_override: np.ndarray | None = None,
            segment_offset: int = 1) -> PathEnsemble:
    """Continue an ensemble to ``t_end``, from its final state or a snapshot.

    With ``reuse_streams=True`` the continuation consumes the same noise the
    direct run did/would have, reproducing it exactly; otherwise segment
    ``ens.segment + segment_offset`` supplies fresh streams, which preserves
    the law but decorrelates paths — the configuration restart-invariance
    and conditional-consistency checks need.  ``x0_override`` substitutes
    initial positions (fault injection); it requires fresh streams.
    """
    cfg = replace(ens.config, t_end=float(t_end))
    if from_time is None:
        t_from, x0 = ens.t_final, ens.x
    else:
        t_from, x0 = float(from_time), ens.snapshots[float(from_time)]
    if x0_override is not None:
        if reuse_streams:
            raise ValueError("overridden positions cannot replay old noise")
        x0 = x0_override
    if reuse_streams:
        fine = ens.fine_origin + _aligned_steps(
            ens.t_begin, t_from, cfg.h, "restart time") * cfg.m_sub
        return simulate(cfg, snapshot_times, params=ens.params,
                        segment=ens.segment, x0=x0, keys=ens.keys,
                        fine_offset=fine, t_begin=t_from)
    if segment_offset < 1:
        raise ValueError("fresh restarts need a positive segment offset")
    return simulate(cfg, snapshot_times, params=ens.params,
                    segment=ens.segment + segment_offset, x0=x0,
                    fine_offset=0, t_begin=t_from)


def save_paths_csv(path, ens: PathEnsemble, times: tuple[float, ...] | None = None):
    """Write snapshot positions as CSV rows ``t,path_id,x1,...,xd``."""
    marks = sorted(ens.snapshots) if times is None else sorted(times)
    d = ens.config.d
    header = "t,path_id," + ",".join(f"x{k+1}" for k in range(d))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for t in marks:
            pos = ens.snapshots[t] if t in ens.snapshots else None
            if pos is None:
                if abs(t - ens.t_final) <= _ALIGN_TOL:
                    pos = ens.x
                else:
                    raise KeyError(f"no snapshot at t={t!r}")
            for i in range(pos.shape[0]):
                coords = ",".join("%.17g" % v for v in pos[i])
                fh.write("%.17g,%d,%s\n" % (t, i, coords))
