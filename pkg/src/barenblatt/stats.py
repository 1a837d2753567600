"""Distribution-comparison statistics used by the verification suites.

Kolmogorov-Smirnov machinery is kept explicit (statistics computed here,
asymptotic critical values from scipy.special.kolmogi) so that every
acceptance threshold is a plain number in the report, not a p-value buried
in a library call.
"""
from __future__ import annotations

from typing import Callable

import numpy as np
from scipy.special import kolmogi
from scipy.stats import chi2


def ks_statistic(samples: np.ndarray, cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    """One-sample KS distance sup_x |F_n(x) - F(x)| against a callable CDF."""
    s = np.sort(np.asarray(samples, dtype=float))
    n = s.size
    if n == 0:
        raise ValueError("need at least one sample")
    f = np.asarray(cdf(s), dtype=float)
    if f.shape != s.shape:
        raise ValueError("cdf must return one value per sample")
    i = np.arange(1, n + 1, dtype=float)
    return float(max((i / n - f).max(), (f - (i - 1) / n).max()))


def ks_statistic_two_sample(a: np.ndarray, b: np.ndarray) -> float:
    """Two-sample KS distance; ties handled by right-continuous ECDFs."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ValueError("need at least one sample on each side")
    grid = np.concatenate([a, b])
    ca = np.searchsorted(a, grid, side="right") / a.size
    cb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.abs(ca - cb).max())


def ks_critical(n: int, alpha: float) -> float:
    """Asymptotic one-sample KS critical value at level alpha."""
    if n <= 0:
        raise ValueError("n must be positive")
    return float(kolmogi(alpha)) / np.sqrt(n)


def ks_critical_two_sample(n: int, m: int, alpha: float) -> float:
    """Asymptotic two-sample KS critical value at level alpha."""
    if n <= 0 or m <= 0:
        raise ValueError("sample sizes must be positive")
    return float(kolmogi(alpha)) * np.sqrt((n + m) / (n * m))


def angular_uniformity_chi2(rel: np.ndarray, n_bins: int = 36,
                            alpha: float = 0.01) -> dict:
    """Chi-square test that planar offsets have uniform angles.

    rel: (n, 2) positions relative to the center. Returns a dict with the
    statistic, the chi2 critical value at level alpha, and the verdict.
    """
    rel = np.asarray(rel, dtype=float)
    if rel.ndim != 2 or rel.shape[1] != 2:
        raise ValueError("angular test is for planar samples of shape (n, 2)")
    n = rel.shape[0]
    if n < 5 * n_bins:
        raise ValueError("too few samples for a %d-bin chi-square test" % n_bins)
    theta = np.arctan2(rel[:, 1], rel[:, 0])
    counts, _ = np.histogram(theta, bins=n_bins, range=(-np.pi, np.pi))
    expected = n / n_bins
    stat = float(((counts - expected) ** 2 / expected).sum())
    crit = float(chi2.ppf(1.0 - alpha, df=n_bins - 1))
    return {"statistic": stat, "critical": crit, "n_bins": n_bins,
            "alpha": alpha, "pass": stat <= crit}


def ks_statistic_2d(a: np.ndarray, b: np.ndarray, grid: int = 256) -> float:
    """Binned two-sample KS distance in the plane.

    The exact 2-D KS statistic maximizes the ECDF gap over the four quadrant
    orientations at every data point; this variant evaluates the same four
    orientations on a grid x grid histogram of the pooled bounding box,
    which converges to the exact value as the grid refines and is O(grid^2)
    instead of O(n^2).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or a.shape[1] != 2 or b.ndim != 2 or b.shape[1] != 2:
        raise ValueError("expect planar samples of shape (n, 2)")
    lo = np.minimum(a.min(axis=0), b.min(axis=0))
    hi = np.maximum(a.max(axis=0), b.max(axis=0))
    span = np.where(hi > lo, hi - lo, 1.0)
    edges = [np.linspace(lo[k] - 1e-9 * span[k], hi[k] + 1e-9 * span[k],
                         grid + 1) for k in range(2)]
    ha, _, _ = np.histogram2d(a[:, 0], a[:, 1], bins=edges)
    hb, _, _ = np.histogram2d(b[:, 0], b[:, 1], bins=edges)
    ha /= a.shape[0]
    hb /= b.shape[0]
    diff = ha - hb
    best = 0.0
    for flip_x in (False, True):
        for flip_y in (False, True):
            d = diff[::-1, :] if flip_x else diff
            d = d[:, ::-1] if flip_y else d
            cum = d.cumsum(axis=0).cumsum(axis=1)
            gap = float(np.abs(cum).max())
            if gap > best:
                best = gap
    return best
