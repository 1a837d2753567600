"""KS / chi-square machinery, calibrated against scipy and permutations."""
import numpy as np
import pytest
import scipy.special
import scipy.stats

from barenblatt.stats import (
    angular_uniformity_chi2,
    ks_critical,
    ks_critical_two_sample,
    ks_statistic,
    ks_statistic_2d,
    ks_statistic_two_sample,
)


def test_ks_statistic_matches_scipy():
    rng = np.random.default_rng(0)
    x = rng.uniform(size=500)
    ours = ks_statistic(x, lambda v: np.clip(v, 0, 1))
    ref = scipy.stats.kstest(x, "uniform").statistic
    assert ours == pytest.approx(ref, abs=1e-12)


def test_ks_two_sample_matches_scipy():
    rng = np.random.default_rng(1)
    a = rng.normal(size=400)
    b = rng.normal(0.1, 1.0, size=300)
    ours = ks_statistic_two_sample(a, b)
    ref = scipy.stats.ks_2samp(a, b, method="asymp").statistic
    assert ours == pytest.approx(ref, abs=1e-12)


def test_ks_critical_value_oracle():
    # kolmogi(0.01)/sqrt(n); cross-check against the Kolmogorov distribution
    n = 10000
    crit = ks_critical(n, 0.01)
    assert scipy.special.kolmogorov(crit * np.sqrt(n)) == pytest.approx(0.01, rel=1e-10)
    assert ks_critical_two_sample(n, n, 0.01) == pytest.approx(
        crit * np.sqrt(2.0), rel=1e-12)


def test_ks_calibration_false_positive_rate():
    # under the null, rejection at the 1% level should be rare
    rng = np.random.default_rng(2)
    crit = ks_critical(2000, 0.01)
    rejections = sum(
        ks_statistic(rng.uniform(size=2000), lambda v: np.clip(v, 0, 1)) > crit
        for _ in range(200))
    assert rejections <= 8


def test_ks_detects_wrong_law():
    rng = np.random.default_rng(3)
    x = rng.uniform(size=2000) ** 1.2
    assert ks_statistic(x, lambda v: np.clip(v, 0, 1)) > ks_critical(2000, 0.01)


def test_two_sample_null_calibration():
    rng = np.random.default_rng(4)
    crit = ks_critical_two_sample(1000, 1000, 0.01)
    rejections = 0
    for _ in range(100):
        a = rng.normal(size=1000)
        b = rng.normal(size=1000)
        if ks_statistic_two_sample(a, b) > crit:
            rejections += 1
    assert rejections <= 5


def test_angular_uniformity_accepts_uniform_and_rejects_skew():
    rng = np.random.default_rng(5)
    n = 5000
    theta = rng.uniform(-np.pi, np.pi, n)
    rel = np.column_stack([np.cos(theta), np.sin(theta)])
    assert angular_uniformity_chi2(rel)["pass"]
    theta_bad = rng.normal(0.0, 1.0, n)
    rel_bad = np.column_stack([np.cos(theta_bad), np.sin(theta_bad)])
    assert not angular_uniformity_chi2(rel_bad)["pass"]


def test_angular_uniformity_requires_enough_samples():
    with pytest.raises(ValueError):
        angular_uniformity_chi2(np.ones((10, 2)))


def test_ks2d_zero_for_identical_samples():
    rng = np.random.default_rng(6)
    a = rng.normal(size=(500, 2))
    assert ks_statistic_2d(a, a.copy(), grid=64) == 0.0


def test_ks2d_detects_shift():
    rng = np.random.default_rng(7)
    a = rng.normal(size=(2000, 2))
    b = rng.normal(size=(2000, 2)) + np.array([0.5, 0.0])
    assert ks_statistic_2d(a, b, grid=64) > 0.1


def test_ks2d_permutation_calibration():
    # null distribution by pooled-permutation at small N: the observed
    # statistic for iid halves should not be an extreme outlier
    rng = np.random.default_rng(8)
    pool = rng.normal(size=(1200, 2))
    obs = ks_statistic_2d(pool[:600], pool[600:], grid=64)
    stats = []
    for _ in range(60):
        perm = rng.permutation(1200)
        stats.append(ks_statistic_2d(pool[perm[:600]], pool[perm[600:]], grid=64))
    assert obs <= np.quantile(stats, 0.99) * 1.5


def test_ks_statistic_rejects_empty():
    with pytest.raises(ValueError):
        ks_statistic(np.array([]), lambda v: v)
    with pytest.raises(ValueError):
        ks_statistic_two_sample(np.array([]), np.array([1.0]))
