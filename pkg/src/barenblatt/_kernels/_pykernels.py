"""Numpy reference kernels.

These define the numerical contract; the Cython backend replicates the same
per-element arithmetic (same formulas, same order, same ndtri).  Noise
streams are bit-identical across backends; drift/diffusion coefficients may
differ by ~1 ulp where numpy's SIMD pow and libm pow disagree, so full
trajectories agree to ~1e-12 relative rather than bitwise.

Status codes returned by the FV kernels: 0 ok, 1 negative cell beyond the
clip tolerance, 2 non-finite state.
"""
from __future__ import annotations

import numpy as np
from scipy.special import ndtri

from ..numerics import counter_uniforms

BACKEND_NAME = "python"

OK = 0
NEGATIVE_CELL = 1
NOT_FINITE = 2

# clip tolerance: cells in [-CLIP_REL * max(u), 0) are set to 0 and counted
CLIP_REL = 1e-14


def em_evolve(x, keys, y, t0, h, n_steps, m_sub, fine_offset,
              p, c1, q, kappa, a_coef, a_texp, dc1, dc2,
              bmax, diff_scale):
    """Advance an ensemble by n_steps tamed Euler-Maruyama steps, in place.

    x          : (n, d) positions, modified in place
    keys       : (n,) uint64 per-path stream keys
    t0         : physical time of the first step's coefficient evaluation
    m_sub      : noise sub-steps per step (common-random-number refinement)
    fine_offset: index of the first fine noise increment consumed here
    """
    n, d = x.shape
    h_f = h / m_sub
    sqrt_hf = np.sqrt(h_f)
    inv_pm1 = 1.0 / (p - 1.0)
    rel = np.empty_like(x)
    for step in range(n_steps):
        s = t0 + step * h
        np.subtract(x, y[None, :], out=rel)
        r = np.sqrt(np.sum(rel * rel, axis=1))
        pos = r > 0.0
        rs = np.where(pos, r, 1.0)
        e = rs ** inv_pm1
        re = rs * e                       # r^{p/(p-1)}
        roe = rs / e                      # r^{(p-2)/(p-1)}
        sk = s ** -kappa
        big_a = a_coef * s ** -a_texp
        g = c1 - q * sk * re
        on = (g >= 0.0) & pos
        gc = np.where(g > 0.0, g, 0.0)
        a = np.where(on, big_a * gc * roe, 0.0)
        lam = np.where(on, big_a * (dc1 * gc / re - dc2 * sk), 0.0)
        # scale-safe taming: mu = lam / (1 + h |lam| r / bmax) without overflow
        with np.errstate(divide="ignore"):
            mu = 1.0 / (1.0 / lam + np.copysign(h * r / bmax, lam))
        mu = np.where(on, mu, 0.0)
        base = np.uint64((fine_offset + step * m_sub) * d)
        acc = np.zeros_like(x)
        for j in range(m_sub):
            for dim in range(d):
                ctr = base + np.uint64(j * d + dim)
                acc[:, dim] += ndtri(counter_uniforms(keys, ctr))
        sig = np.sqrt(diff_scale * a)
        x += (mu * h)[:, None] * rel + (sig * sqrt_hf)[:, None] * acc
    return OK


def fv_plaplace_evolve(u, areas, vols, dr, p, duration, cfl, mass0):
    """Advance the radial p-Laplace FV state by ``duration``, in place.

    Explicit two-point flux F = |du|^{p-2} du with zero-flux boundaries;
    adaptive dt <= cfl dr^2 / max((p-1)|du|^{p-2}).  Returns
    (status, steps, max_mass_dev, clip_count).
    """
    m = u.shape[0]
    tiny = np.finfo(float).tiny
    t_adv = 0.0
    steps = 0
    max_dev = 0.0
    clips = 0
    flux = np.zeros(m + 1)
    while t_adv < duration:
        du = (u[1:] - u[:-1]) / dr
        dface = np.abs(du) ** (p - 2.0)
        dt = cfl * dr * dr / (max((p - 1.0) * dface.max(), tiny))
        dt = min(dt, duration - t_adv)
        flux[1:-1] = dface * du
        u += (dt / vols) * (areas[1:] * flux[1:] - areas[:-1] * flux[:-1])
        t_adv += dt
        steps += 1
        umax = u.max()
        if not np.isfinite(umax):
            return NOT_FINITE, steps, max_dev, clips
        neg = u < 0.0
        if np.any(neg):
            if u.min() < -CLIP_REL * umax:
                return NEGATIVE_CELL, steps, max_dev, clips
            clips += int(neg.sum())
            u[neg] = 0.0
        dev = abs(float(u @ vols) - mass0) / mass0
        if dev > max_dev:
            max_dev = dev
    return OK, steps, max_dev, clips


def fv_linear_evolve(u, areas, vols, dr, p1f, p2f,
                     c1, q, kappa, a_coef, a_texp, s0,
                     duration, cfl, mass0):
    """Advance the linearized equation du/dt = div(rho grad u), in place.

    rho(s, r) = a_coef s^{-a_texp} (c1 - q s^{-kappa} r^{p/(p-1)})_+
                r^{(p-2)/(p-1)} is evaluated on faces from the precomputed
    radial powers p1f = r^{p/(p-1)}, p2f = r^{(p-2)/(p-1)} (face arrays of
    length m+1); s0 is the physical time at entry.  Returns like
    fv_plaplace_evolve.
    """
    m = u.shape[0]
    tiny = np.finfo(float).tiny
    t_adv = 0.0
    steps = 0
    max_dev = 0.0
    clips = 0
    flux = np.zeros(m + 1)
    while t_adv < duration:
        s = s0 + t_adv
        sk = s ** -kappa
        big_a = a_coef * s ** -a_texp
        rho = big_a * np.maximum(c1 - q * sk * p1f, 0.0) * p2f
        dt = cfl * dr * dr / max(rho.max(), tiny)
        dt = min(dt, duration - t_adv)
        du = (u[1:] - u[:-1]) / dr
        flux[1:-1] = rho[1:-1] * du
        u += (dt / vols) * (areas[1:] * flux[1:] - areas[:-1] * flux[:-1])
        t_adv += dt
        steps += 1
        umax = u.max()
        if not np.isfinite(umax):
            return NOT_FINITE, steps, max_dev, clips
        neg = u < 0.0
        if np.any(neg):
            if u.min() < -CLIP_REL * umax:
                return NEGATIVE_CELL, steps, max_dev, clips
            clips += int(neg.sum())
            u[neg] = 0.0
        dev = abs(float(u @ vols) - mass0) / mass0
        if dev > max_dev:
            max_dev = dev
    return OK, steps, max_dev, clips
