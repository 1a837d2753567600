"""Shared numerical infrastructure: quadrature, root finding, counter-based
random streams, and inverse-CDF sampling of radial densities.

Everything here is generic plumbing; the closed-form math lives in
:mod:`barenblatt.core`.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, interpolate, optimize

__all__ = [
    "NumericsError",
    "integrate_radial",
    "find_root",
    "RngStream",
    "RadialCdf",
    "sample_barenblatt",
    "uniform_directions",
    "mix64",
    "stream_key",
    "counter_uniforms",
    "counter_normals",
]


class NumericsError(RuntimeError):
    """A numerical routine failed to reach its requested accuracy."""


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

def integrate_radial(
    f: Callable[[np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    *,
    tol: float = 1e-10,
    singularity: float | None = None,
    max_depth: int = 60,
) -> float:
    """Integrate ``f`` on [lo, hi] to absolute accuracy ``tol``.

    ``f`` must accept numpy arrays.  ``singularity`` may name one endpoint
    (``lo`` or ``hi``) where the integrand is singular-but-integrable; the
    interval is then subdivided geometrically toward that endpoint (ratio 1/2,
    at most ``max_depth`` panels) and each panel is handled by adaptive
    Gauss-Kronrod quadrature.  Interior singularities are not supported.

    Raises :class:`NumericsError` if the requested accuracy cannot be
    certified; the message carries the achieved error bound.
    """
    if not hi > lo:
        if hi == lo:
            return 0.0
        raise ValueError(f"integrate_radial: empty interval [{lo}, {hi}]")

    def _quad(a: float, b: float, eps: float) -> tuple[float, float]:
        val, err = integrate.quad(f, a, b, epsabs=eps, epsrel=0.0, limit=200)
        return val, err

    if singularity is None:
        val, err = _quad(lo, hi, tol)
        if err > max(tol, 1e-3 * abs(val) + 1e-300) * 10.0:
            raise NumericsError(
                f"quadrature on [{lo}, {hi}] achieved only {err:.3e} (tol {tol:.3e})"
            )
        return val
    if singularity not in (lo, hi):
        raise ValueError("singularity must be an endpoint of the interval")

    # Never let quadrature nodes land exactly on the singular endpoint: for
    # panels a few ulp wide the Gauss-Kronrod nodes round onto it.  Clamping
    # the integrand one ulp inward changes the integral only by the mass of
    # a single-ulp neighbourhood, which no floating-point rule can resolve.
    if singularity == hi:
        inward = np.nextafter(hi, lo)
        fs = lambda x: f(x if x < inward else inward)  # noqa: E731
    else:
        inward = np.nextafter(lo, hi)
        fs = lambda x: f(x if x > inward else inward)  # noqa: E731

    def _quad_s(a: float, b: float, eps: float) -> tuple[float, float]:
        # QUADPACK flags the clamped one-ulp kink as bad behaviour; the
        # returned error bound still participates in the certification below
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, err = integrate.quad(
                fs, a, b, epsabs=eps, epsrel=0.0, limit=200)
        return val, err

    # graded geometric panels accumulating toward the singular endpoint
    length = hi - lo
    total = 0.0
    total_err = 0.0
    offsets = [length * 0.5 ** j for j in range(1, max_depth)]
    panel_tol = tol / (2 * len(offsets) + 2)
    prev = length
    for off in offsets:
        if singularity == lo:
            a, b = lo + off, lo + prev
        else:
            a, b = hi - prev, hi - off
        if b > a:
            val, err = _quad_s(a, b, panel_tol)
            total += val
            total_err += err
        prev = off
    # innermost sliver: the endpoint is integrable, one more adaptive pass
    # (skipped when grading has collapsed it to zero width in floating point)
    if singularity == lo:
        a, b = lo, lo + prev
    else:
        a, b = hi - prev, hi
    if b > a:
        val, err = _quad_s(a, b, panel_tol)
        total += val
        total_err += err
    if total_err > 10.0 * max(tol, 1e-3 * abs(total) + 1e-300):
        raise NumericsError(
            f"graded quadrature achieved only {total_err:.3e} (tol {tol:.3e})"
        )
    return total


def find_root(
    g: Callable[[float], float],
    lo: float,
    hi: float,
    *,
    tol: float = 1e-12,
    max_iter: int = 200,
) -> float:
    """Root of a continuous scalar function on a sign-changing bracket.

    Brent's method (bisection with secant / inverse-quadratic acceleration).
    Raises ``ValueError`` when [lo, hi] does not bracket a sign change.
    """
    glo, ghi = g(lo), g(hi)
    if not np.isfinite(glo) or not np.isfinite(ghi):
        raise ValueError(f"find_root: non-finite bracket values g({lo})={glo}, g({hi})={ghi}")
    if glo == 0.0:
        return lo
    if ghi == 0.0:
        return hi
    if glo * ghi > 0.0:
        raise ValueError(
            f"find_root: no sign change on [{lo}, {hi}] (g={glo:.6g}, {ghi:.6g})"
        )
    return float(optimize.brentq(g, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps,
                                 maxiter=max_iter))


# ---------------------------------------------------------------------------
# counter-based randomness
#
# Stateless SplitMix64 construction: a per-(seed, stream) 64-bit key, and the
# n-th variate of a stream is mix64(key + n * GOLDEN).  Identical integer
# arithmetic is replicated in the Cython kernels; the Gaussian step uses
# scipy's ndtri in both backends, so backends agree bit-for-bit.
# ---------------------------------------------------------------------------

_GOLD = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U64 = np.uint64


def mix64(z: np.ndarray | int) -> np.ndarray | np.uint64:
    """SplitMix64 finalizer (Stafford mix13). Bijective on uint64."""
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        z = z ^ (z >> np.uint64(31))
    return z if z.ndim else np.uint64(z)


def stream_key(seed: int, stream_id: np.ndarray | int) -> np.ndarray | np.uint64:
    """64-bit key identifying the (seed, stream_id) random stream."""
    with np.errstate(over="ignore"):
        a = mix64(_U64(seed & 0xFFFFFFFFFFFFFFFF) + _GOLD)
        b = mix64(np.asarray(stream_id, dtype=np.uint64) + _U64(2) * _GOLD)
        return mix64(a + b)


def _raw(key: np.ndarray | np.uint64, counter: np.ndarray | np.uint64) -> np.ndarray:
    with np.errstate(over="ignore"):
        return mix64(np.asarray(key, dtype=np.uint64)
                     + np.asarray(counter, dtype=np.uint64) * _GOLD)


def _to_unit(bits: np.ndarray) -> np.ndarray:
    # 53-bit mantissa, offset by half an ulp: strictly inside (0, 1)
    return ((bits >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53


def counter_uniforms(key, counter) -> np.ndarray:
    """Uniform(0,1) variates at explicit counter positions (broadcasting)."""
    return _to_unit(_raw(key, counter))


def counter_normals(key, counter) -> np.ndarray:
    """Standard normal variates at explicit counter positions."""
    from scipy.special import ndtri

    return ndtri(counter_uniforms(key, counter))


@dataclass
class RngStream:
    """Sequential view of a counter-based stream.

    Streams with distinct ``stream_id`` under the same seed are independent;
    a stream is reproducible from ``(seed, stream_id)`` alone, and the
    counter state makes draws independent of call batching.
    """

    seed: int
    stream_id: int = 0
    counter: int = 0
    _key: np.uint64 = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._key = stream_key(self.seed, self.stream_id)

    def uniforms(self, n: int) -> np.ndarray:
        c0 = self.counter
        self.counter += int(n)
        return counter_uniforms(self._key, c0 + np.arange(n, dtype=np.uint64))

    def normals(self, n: int) -> np.ndarray:
        from scipy.special import ndtri

        return ndtri(self.uniforms(n))

    def spawn(self, offset: int) -> "RngStream":
        """Independent stream with a derived id (offset must be > 0)."""
        return RngStream(self.seed, self.stream_id + offset)


def uniform_directions(rng: RngStream, n: int, d: int) -> np.ndarray:
    """n unit vectors uniform on the (d-1)-sphere, via normalized Gaussians."""
    if d < 1:
        raise ValueError("d must be >= 1")
    g = rng.normals(n * d).reshape(n, d)
    norms = np.linalg.norm(g, axis=1)
    # a zero vector has probability 0; regenerating would break counter
    # bookkeeping, so nudge instead (exact zeros cannot occur with ndtri output)
    norms[norms == 0.0] = 1.0
    return g / norms[:, None]


# ---------------------------------------------------------------------------
# inverse-CDF sampling of a radial density
# ---------------------------------------------------------------------------

class RadialCdf:
    """Tabulated CDF of a radial density on [0, r_max] with a monotone-cubic
    inverse for inverse-transform sampling.

    The density ``f(r)`` is the full radial mass density (surface factor
    included), i.e. total mass = integral of f over [0, r_max].  Tabulation
    uses per-cell Gauss-Legendre panels; the table is renormalized to end at
    exactly 1 and the raw mass is kept in ``raw_mass``.
    """

    _GL_ORDER = 8

    def __init__(self, f: Callable[[np.ndarray], np.ndarray], r_max: float,
                 m: int = 4096):
        if not (r_max > 0.0):
            raise ValueError("r_max must be positive")
        if m < 8:
            raise ValueError("table needs at least 8 cells")
        self.r_max = float(r_max)
        self.m = int(m)
        edges = np.linspace(0.0, self.r_max, self.m + 1)
        nodes, weights = np.polynomial.legendre.leggauss(self._GL_ORDER)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[:-1] + edges[1:])
        pts = mid[:, None] + half[:, None] * nodes[None, :]
        vals = np.asarray(f(pts.ravel()), dtype=float).reshape(pts.shape)
        if np.any(vals < -1e-12):
            raise ValueError("radial density is negative on the table grid")
        cell_mass = half * (vals * weights[None, :]).sum(axis=1)
        cdf = np.concatenate(([0.0], np.cumsum(cell_mass)))
        self.raw_mass = float(cdf[-1])
        if not self.raw_mass > 0.0:
            raise NumericsError("radial density has zero mass on [0, r_max]")
        cdf /= self.raw_mass
        cdf[-1] = 1.0
        self.grid = edges
        self.cdf = cdf
        self._fwd = interpolate.PchipInterpolator(edges, cdf, extrapolate=False)
        # strictly increasing subset for the inverse (flat stretches occur
        # only where the density vanishes)
        keep = np.concatenate(([True], np.diff(cdf) > 0.0))
        keep[0] = True
        self._inv = interpolate.PchipInterpolator(cdf[keep], edges[keep],
                                                  extrapolate=False)

    def __call__(self, r: np.ndarray | float) -> np.ndarray | float:
        r = np.clip(r, 0.0, self.r_max)
        return self._fwd(r)

    def inverse(self, u: np.ndarray | float) -> np.ndarray | float:
        u = np.clip(u, 0.0, 1.0)
        return self._inv(u)

    def sample(self, rng: RngStream, n: int) -> np.ndarray:
        return np.asarray(self.inverse(rng.uniforms(n)), dtype=float)


def sample_barenblatt(params, y, s: float, n: int, rng: RngStream,
                      *, table_cells: int = 4096) -> np.ndarray:
    """Exact i.i.d. sample of n points from the profile at physical time s.

    Radii by inverse-CDF through a :class:`RadialCdf` table, directions
    uniform on the sphere.  Consumes ``rng`` for the radii and the derived
    stream ``rng.spawn(1)`` for the directions, so path i's draw depends only
    on (seed, stream ids, i), never on n.
    """
    # late import: core builds its constants through this module
    from . import core

    if n < 1:
        raise ValueError("need n >= 1 samples")
    y = np.asarray(y, dtype=float).reshape(params.d)
    r_max = core.support_radius(params, s)
    cdf = RadialCdf(lambda r: core.radial_mass_density(params, s, r), r_max,
                    m=table_cells)
    radii = cdf.sample(rng, n)
    dirs = uniform_directions(rng.spawn(1), n, params.d)
    return y[None, :] + radii[:, None] * dirs
