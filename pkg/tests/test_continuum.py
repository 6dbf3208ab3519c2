import math
import time

import numpy as np
import pytest
import sympy as sp

from taucalc.continuum import (
    GridMismatch,
    GridSpec,
    SupportError,
    bump,
    delta_estimate,
    gaussian,
    involution_c,
    norm_c,
    refinement_study,
    resample_dilate,
    rconv_c,
    sample,
    tconv_c,
    tilde_c,
)

# Frozen from the symbolic oracle below: mass of phi over mass of phi(./2).
DELTA_AT_2 = 0.5


def test_change_of_variables_oracle():
    """dk = delta(h) d(hk): integrate a Gaussian against both measures."""
    k, h = sp.symbols("k h", positive=True)
    x = sp.symbols("x", real=True)
    phi = sp.exp(-x**2)
    base = sp.integrate(phi, (x, -sp.oo, sp.oo))
    dilated = sp.integrate(phi.subs(x, x / h), (x, -sp.oo, sp.oo))
    delta = sp.simplify(base / dilated)
    assert sp.simplify(delta - 1 / h) == 0
    assert float(delta.subs(h, 2)) == DELTA_AT_2


@pytest.fixture(scope="module")
def grid():
    return GridSpec.window(-8, 8, 1024, q=2, m_max=4)


def test_delta_examples(grid):
    assert delta_estimate(grid, 1.0) == pytest.approx(1.0, abs=1e-12)
    assert abs(delta_estimate(grid, 2.0) - DELTA_AT_2) < 1e-3
    assert abs(delta_estimate(grid, 2.0) * delta_estimate(grid, 0.5) - 1) < 1e-3
    with pytest.raises(ValueError):
        delta_estimate(grid, 3.0)


def test_support_error():
    tiny = GridSpec(n=8, x0=0.5, dx=0.1)
    with pytest.raises(SupportError):
        delta_estimate(tiny, 2.0)


def test_resample_examples(grid):
    xs = grid.xs
    u = bump(xs, 1.0, 0.5)
    assert np.array_equal(resample_dilate(u, 1.0, grid), u)
    moved = resample_dilate(u, 2.0, grid)
    assert np.max(np.abs(moved - bump(xs, 2.0, 1.0))) < 1e-3
    assert moved.sum() * grid.dx == pytest.approx(2 * u.sum() * grid.dx, rel=1e-3)
    g = gaussian(xs, 0.2, 0.6)
    back = resample_dilate(resample_dilate(g, 2.0, grid), 0.5, grid)
    assert np.max(np.abs(back - g)) < 10 * grid.dx**2


def test_operations_on_gaussians(grid):
    G = grid.with_estimated_delta()
    f = sample(G, lambda h, x: math.exp(-math.log2(h) ** 2) * gaussian(x, -0.3, 0.4))
    g = sample(G, lambda h, x: gaussian(x, 0.5, 0.3) / (1 + math.log2(h) ** 2))
    t = tconv_c(f, g)
    assert norm_c(t) <= norm_c(f) * norm_c(g) + 1e-3
    prod = np.convolve(tilde_c(f), tilde_c(g))[G.origin:G.origin + G.n] * G.dx
    r = tilde_c(rconv_c(f, g))
    assert np.sum(np.abs(r - prod)) / np.sum(np.abs(prod)) < 1e-3
    assert norm_c(involution_c(f)) == pytest.approx(norm_c(f), rel=1e-9)


def test_single_node_tilde(grid):
    G = grid.with_estimated_delta()
    slice_ = gaussian(G.xs, 0, 0.5)
    f = sample(G, lambda h, x: slice_ if h == 1 else np.zeros_like(x))
    assert np.allclose(tilde_c(f), slice_ * G.h_weight)


def test_grid_round_trip_and_mismatch(grid):
    assert GridSpec.from_dict(grid.to_dict()) == grid
    G1, G2 = grid.with_estimated_delta(), grid.refined().with_estimated_delta()
    f = sample(G1, lambda h, x: gaussian(x))
    g = sample(G2, lambda h, x: gaussian(x))
    with pytest.raises(GridMismatch):
        tconv_c(f, g)


def test_refinement_study(grid):
    t0 = time.perf_counter()
    study = refinement_study(grid, levels=3)
    assert time.perf_counter() - t0 < 120
    assert study["verdict"] == "consistent", study["checks"]
    assert all(study["checks"].values())
    assert abs(study["levels"][0]["delta_at_2"] - DELTA_AT_2) < 1e-3
