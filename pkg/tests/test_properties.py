"""Property-based checks for the small algebraic contracts."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from originsim.calibrate import chi_square
from originsim.density import total_variation
from originsim.grids import GridSpec, format_grid, parse_grid
from originsim.surface import MaternParams, matern_cov
from originsim.transit import edge_cost

finite = dict(allow_nan=False, allow_infinity=False)


@settings(deadline=None, max_examples=60)
@given(
    lon=st.floats(-180, 180),
    lat=st.floats(-80, 80),
    nx=st.integers(1, 40),
    ny=st.integers(1, 40),
    res=st.floats(0.01, 2.0, **finite),
    seed=st.integers(0, 2**31),
)
def test_grid_text_round_trip_exact(lon, lat, nx, ny, res, seed):
    grid = GridSpec(lon, lat, lon + nx * res, lat + ny * res, res, nx, ny)
    values = np.random.default_rng(seed).standard_normal((ny, nx))
    grid2, values2 = parse_grid(format_grid(grid, values))
    assert (grid2.nx, grid2.ny) == (nx, ny)
    assert grid2.lon_min == grid.lon_min and grid2.lat_min == grid.lat_min
    assert grid2.resolution == grid.resolution
    assert np.array_equal(values, values2)


@settings(deadline=None, max_examples=100)
@given(
    lon=st.floats(-50, 50, **finite),
    lat=st.floats(-50, 50, **finite),
)
def test_cell_of_always_lands_in_grid(lon, lat):
    grid = GridSpec.from_bbox(0.0, 0.0, 4.0, 3.0, 0.5)
    i, j = grid.cell_of(lon, lat)
    assert 0 <= int(i) < grid.nx
    assert 0 <= int(j) < grid.ny
    flat = int(grid.flat_index(lon, lat))
    assert flat == int(j) * grid.nx + int(i)


@settings(deadline=None, max_examples=100)
@given(
    d=st.floats(0.1, 5.0, **finite),
    c=st.floats(0.0, 1.0, **finite),
    cmax_extra=st.floats(0.0, 1.0, **finite),
    lam_a=st.floats(0.0, 10.0, **finite),
    lam_b=st.floats(0.0, 10.0, **finite),
)
def test_edge_cost_monotone_in_factor(d, c, cmax_extra, lam_a, lam_b):
    cmax = c + cmax_extra + 1e-6
    lo, hi = sorted((lam_a, lam_b))
    for form in ("literal", "ratio"):
        assert edge_cost(d, c, cmax, lo, form) <= edge_cost(d, c, cmax, hi, form) + 1e-12
        assert edge_cost(d, c, cmax, lo, form) > 0


@settings(deadline=None, max_examples=60)
@given(
    d1=st.floats(0.0, 2.0, **finite),
    d2=st.floats(0.0, 2.0, **finite),
    nu=st.sampled_from([1.0, 2.0, 3.0, 0.5, 1.5]),
)
def test_matern_bounded_by_sill_and_monotone(d1, d2, nu):
    p = MaternParams(smoothness=nu)
    lo, hi = sorted((d1, d2))
    v_lo, v_hi = matern_cov(lo, p), matern_cov(hi, p)
    assert 0 <= v_hi <= v_lo + 1e-12
    assert v_lo <= p.sill + 1e-12


@settings(deadline=None, max_examples=60)
@given(
    counts=st.lists(st.integers(0, 50), min_size=2, max_size=12),
    seed=st.integers(0, 2**31),
)
def test_chi_square_zero_iff_equal(counts, seed):
    e = np.array(counts, dtype=float)
    assert chi_square(e, e) == 0.0
    rng = np.random.default_rng(seed)
    o = e + rng.integers(0, 3, size=len(e))
    o[e == 0] = 0
    stat = chi_square(e, o)
    assert stat >= 0
    if np.array_equal(e, o):
        assert stat == 0.0
    elif np.any((e > 0) & (e != o)):
        assert stat > 0


@settings(deadline=None, max_examples=60)
@given(
    raw_p=st.lists(st.floats(0.001, 1.0, **finite), min_size=2, max_size=30),
    seed=st.integers(0, 2**31),
)
def test_total_variation_is_a_metric_on_pmfs(raw_p, seed):
    p = np.array(raw_p)
    p /= p.sum()
    rng = np.random.default_rng(seed)
    q = rng.random(len(p)) + 1e-9
    q /= q.sum()
    r = rng.random(len(p)) + 1e-9
    r /= r.sum()
    assert total_variation(p, q) == total_variation(q, p)
    assert 0.0 <= total_variation(p, q) <= 1.0 + 1e-12
    assert total_variation(p, r) <= total_variation(p, q) + total_variation(q, r) + 1e-12
    assert total_variation(p, p) == 0.0
