"""Backend registry and numpy/compiled kernel agreement.

Cross-backend contract (documented in both kernel modules): RNG streams are
bit-identical; FV states are bit-identical where numpy's pow hits its exact
fast path (p = 4); EM trajectories agree to ~1e-12 relative (numpy's
vectorized pow and libm pow differ by 1 ulp on some inputs).
"""
import numpy as np
import pytest

from barenblatt import core, derive_params
from barenblatt._kernels import available_backends, default_backend, get_backend
from barenblatt.numerics import stream_key
from barenblatt.pde import grid_for, profile_cell_averages

HAVE_CYTHON = "cython" in available_backends()

needs_cython = pytest.mark.skipif(not HAVE_CYTHON,
                                  reason="compiled backend not built")


def test_registry():
    names = available_backends()
    assert "python" in names
    assert get_backend("python").BACKEND_NAME == "python"
    with pytest.raises(ValueError):
        get_backend("no-such-backend")


def test_default_backend_env_override(monkeypatch):
    monkeypatch.setenv("BARENBLATT_KERNELS", "python")
    assert default_backend() == "python"
    assert get_backend().BACKEND_NAME == "python"
    monkeypatch.delenv("BARENBLATT_KERNELS")
    assert default_backend() == ("cython" if HAVE_CYTHON else "python")


def _em_inputs(params, n=256, d=2, seed=3):
    rng = np.random.default_rng(seed)
    radii = rng.uniform(0.05, 0.9, n) * params.support_radius(0.2)
    theta = rng.uniform(0, 2 * np.pi, n)
    x = np.column_stack([radii * np.cos(theta), radii * np.sin(theta)])
    keys = stream_key(12, np.arange(1, n + 1, dtype=np.uint64))
    coef = dict(p=params.p, c1=params.c1, q=params.q, kappa=params.kappa,
                a_coef=params.a_coef, a_texp=params.a_texp,
                dc1=(params.p - 2) / (params.p - 1),
                dc2=params.q * params.p / (params.p - 1),
                bmax=1e3, diff_scale=2.0)
    return x, keys, np.zeros(d), coef


@needs_cython
def test_em_backends_agree(p24):
    x0, keys, y, coef = _em_inputs(p24)
    py, cy = get_backend("python"), get_backend("cython")
    xa = x0.copy()
    xb = x0.copy()
    py.em_evolve(xa, keys, y, t0=0.2, h=1e-3, n_steps=400, m_sub=1,
                 fine_offset=0, **coef)
    cy.em_evolve(xb, keys, y, t0=0.2, h=1e-3, n_steps=400, m_sub=1,
                 fine_offset=0, **coef)
    np.testing.assert_allclose(xa, xb, rtol=0.0, atol=5e-13)


@needs_cython
def test_fv_plaplace_backends_bit_identical_p4(p24):
    grid = grid_for(p24, 0.6, 300)
    u0 = profile_cell_averages(p24, 0.2, grid)
    py, cy = get_backend("python"), get_backend("cython")
    ua, ub = u0.copy(), u0.copy()
    ra = py.fv_plaplace_evolve(ua, grid.areas, grid.volumes, grid.dr, 4.0,
                               0.05, 0.4, grid.mass(u0))
    rb = cy.fv_plaplace_evolve(ub, grid.areas, grid.volumes, grid.dr, 4.0,
                               0.05, 0.4, grid.mass(u0))
    assert ra[0] == rb[0] == py.OK
    assert ra[1] == rb[1]  # same step count
    np.testing.assert_array_equal(ua, ub)


@needs_cython
def test_fv_linear_backends_bit_identical_p4(p24):
    grid = grid_for(p24, 1.0, 300)
    u0 = profile_cell_averages(p24, 0.2, grid)
    p = p24.p
    p1f = grid.edges ** (p / (p - 1.0))
    p2f = grid.edges ** ((p - 2.0) / (p - 1.0))
    args = (grid.areas, grid.volumes, grid.dr, p1f, p2f, p24.c1, p24.q,
            p24.kappa, p24.a_coef, p24.a_texp, 0.2, 0.05, 0.4)
    py, cy = get_backend("python"), get_backend("cython")
    ua, ub = u0.copy(), u0.copy()
    ra = py.fv_linear_evolve(ua, *args, grid.mass(u0))
    rb = cy.fv_linear_evolve(ub, *args, grid.mass(u0))
    assert ra[0] == rb[0] == py.OK
    np.testing.assert_array_equal(ua, ub)


@needs_cython
def test_rng_constants_shared():
    py, cy = get_backend("python"), get_backend("cython")
    assert (py.OK, py.NEGATIVE_CELL, py.NOT_FINITE) == \
        (cy.OK, cy.NEGATIVE_CELL, cy.NOT_FINITE)
    assert py.CLIP_REL == cy.CLIP_REL


@pytest.mark.parametrize("backend", available_backends())
def test_fv_nan_abort(p24, backend):
    # absurd cfl destabilizes the explicit update -> negative or non-finite
    grid = grid_for(p24, 0.6, 80)
    u0 = profile_cell_averages(p24, 0.2, grid)
    kern = get_backend(backend)
    u = u0.copy()
    status, steps, dev, clips = kern.fv_plaplace_evolve(
        u, grid.areas, grid.volumes, grid.dr, 4.0, 2.0, 80.0, grid.mass(u0))
    assert status in (kern.NEGATIVE_CELL, kern.NOT_FINITE)


@pytest.mark.parametrize("backend", available_backends())
def test_em_rejects_silly_dim(backend):
    # compiled kernel carries a fixed stack buffer; both backends enforce
    # the same documented bound
    params = derive_params(2, 4.0)
    kern = get_backend(backend)
    if not hasattr(kern, "MAX_DIM"):
        pytest.skip("backend has no dimension cap")
    d = kern.MAX_DIM + 1
    x = np.zeros((2, d))
    keys = stream_key(0, np.arange(1, 3, dtype=np.uint64))
    with pytest.raises(ValueError):
        kern.em_evolve(x, keys, np.zeros(d), t0=0.2, h=1e-3, n_steps=1,
                       m_sub=1, fine_offset=0, p=4.0, c1=params.c1,
                       q=params.q, kappa=params.kappa, a_coef=params.a_coef,
                       a_texp=params.a_texp, dc1=1.0, dc2=1.0, bmax=1e3,
                       diff_scale=2.0)
