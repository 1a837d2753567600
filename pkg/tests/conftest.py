"""Shared fixtures.  The expensive path ensembles are session-scoped and
shared across test modules; tests must treat them as read-only."""
import numpy as np
import pytest

from barenblatt import core, derive_params
from barenblatt.sde import SimConfig, simulate


@pytest.fixture(scope="session")
def p24():
    return derive_params(2, 4.0)


@pytest.fixture(scope="session")
def p34():
    return derive_params(3, 4.0)


@pytest.fixture(scope="session")
def ref_config():
    """Mid-size reference run shared by sde/verify tests (read-only)."""
    return SimConfig(d=2, p=4.0, t_start=0.05, t_end=0.8, h=2e-3,
                     n_paths=20000, seed=101, n_workers=4)


@pytest.fixture(scope="session")
def ref_ensemble(ref_config):
    return simulate(ref_config, snapshot_times=(0.3,))


@pytest.fixture(scope="session")
def small_config():
    return SimConfig(d=2, p=4.0, t_start=0.1, t_end=0.3, h=5e-3,
                     n_paths=800, seed=7)


def rel_err(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scale = np.maximum(np.abs(b), 1e-300)
    return np.abs(a - b) / scale
