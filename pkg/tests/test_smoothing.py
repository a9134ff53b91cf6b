from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ringclt.batch import SampleBatch, batch_from_sums
from ringclt.distance import dkw_se
from ringclt.errors import DimMismatch, NonpositiveVariance, ShapeMismatch
from ringclt.smoothing import (
    SmoothingParams,
    f_smooth,
    in_annulus,
    indicator_sandwich,
    indicator_smooth,
    nazarov_bound,
    rho_mixed,
    smoothing_gap,
)

vec = st.lists(st.floats(-5, 5), min_size=1, max_size=6)


def test_f_examples():
    assert f_smooth([0.0, -1.0], [0.5, 0.0], 3.0) == 1.0
    assert f_smooth([1.25, 0.0], [1.0, 0.0], 2.0) == 0.5
    assert f_smooth([0.5], [0.0], 2.0) == 0.0
    with pytest.raises(DimMismatch):
        f_smooth([0.0, 0.0], [0.0], 1.0)


@settings(max_examples=200, deadline=None)
@given(st.data(), st.floats(0.01, 100.0))
def test_f_sandwich_exact(data, phi):
    x = np.array(data.draw(vec))
    r = np.array(data.draw(st.lists(st.floats(-5, 5), min_size=x.size, max_size=x.size)))
    f = f_smooth(x, r, phi)
    assert 0.0 <= f <= 1.0
    assert float(np.all(x <= r)) <= f
    assert f <= float(np.max(x - r) <= 1.0 / phi)


def test_rho_degenerate_blur():
    p = SmoothingParams(r=(0.3, -0.1), phi=2.0, delta=0.0)
    x = np.array([0.5, -0.4])
    assert rho_mixed(x, p, seed=1) == (f_smooth(x, p.r, 2.0), 0.0)


def test_rho_deep_inside():
    delta, pdim = 0.2, 8
    r = np.zeros(pdim)
    x = r - 10 * delta * math.sqrt(math.log(pdim) + 1)
    v, se = rho_mixed(x, SmoothingParams(tuple(r), 1.0, delta, 4096), seed=3)
    assert v >= 1 - 1e-3 - 3 * se


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**32 - 1), st.floats(0.0, 3.0), st.floats(0.1, 5.0))
def test_rho_monotone_under_common_draws(p, seed, bump, phi):
    g = np.random.default_rng(seed)
    x = g.standard_normal(p)
    params = SmoothingParams(tuple(g.standard_normal(p)), phi, 0.3, 64)
    k = int(g.integers(p))
    y = x.copy()
    y[k] += bump
    v0, _ = rho_mixed(x, params, seed=seed)
    v1, _ = rho_mixed(y, params, seed=seed)
    assert 0.0 <= v1 <= v0 <= 1.0


def test_indicator_examples():
    r = np.zeros(3)
    assert indicator_smooth(np.array([0.05, -1.0, 0.0]), r, 0.1, 0.0, 16, 1) == (1.0, 0.0)
    assert indicator_smooth(np.full(3, -5.0), r, 0.1, 0.0, 16, 1) == (0.0, 0.0)
    with pytest.raises(ValueError):
        indicator_smooth(r, r, -0.1, 0.0, 16, 1)


def test_indicator_sandwich_random_grid():
    g = np.random.default_rng(4)
    for i in range(300):
        p = int(g.integers(1, 6))
        r = g.standard_normal(p)
        eps = float(g.uniform(0.001, 0.05))
        band = float(g.uniform(0.0, 1.0))
        x = r + g.uniform(-1.5, 1.5, p)
        v, se = indicator_smooth(x, r, band, eps, 256, seed=i)
        lo, hi = indicator_sandwich(x, r, band, eps, h=100.0)
        assert lo - 3 * se <= v <= hi + 3 * se


def test_nazarov_examples():
    assert nazarov_bound(0.0, 5, 1.0) == 0.0
    assert nazarov_bound(0.1, 1, 1.0, 1.0) == pytest.approx(0.1, abs=1e-15)
    assert nazarov_bound(0.2, 1, 4.0, 1.0) == pytest.approx(0.1, abs=1e-15)
    with pytest.raises(NonpositiveVariance):
        nazarov_bound(0.1, 1, 0.0)


def test_annulus_membership():
    r = np.array([0.0, 0.0])
    assert in_annulus(np.array([0.1, -3.0]), r, 0.1)
    assert not in_annulus(np.array([-0.1, -3.0]), r, 0.1)
    assert not in_annulus(np.array([0.11, -3.0]), r, 0.1)


def test_gap_identical_batches_is_zero():
    g = np.random.default_rng(5)
    b = SampleBatch(g.standard_normal((500, 3, 2)))
    grid = [g.standard_normal(2) for _ in range(5)]
    assert smoothing_gap(b, b, grid, SmoothingParams((0, 0), 2.0, 0.1, 32), seed=1) == 0.0


def test_gap_same_law_small():
    g = np.random.default_rng(6)
    N = 100000
    x = batch_from_sums(g.standard_normal((N, 1)))
    y = batch_from_sums(g.standard_normal((N, 1)))
    grid = [np.array([t]) for t in np.linspace(-2, 2, 9)]
    v = smoothing_gap(x, y, grid, SmoothingParams((0,), 4.0, 0.1, 32), seed=2)
    assert v <= 3 * dkw_se(N, N)


def test_gap_separated_supports():
    N = 5000
    x = batch_from_sums(np.zeros((N, 2)))
    y = batch_from_sums(np.full((N, 2), 10.0))
    v = smoothing_gap(x, y, [np.array([1.0, 1.0])], SmoothingParams((0, 0), 1000.0, 1e-4, 16), seed=3)
    assert v == pytest.approx(1.0, abs=3 * dkw_se(N, N))


def test_gap_shape_mismatch():
    a = SampleBatch(np.zeros((10, 2, 1)))
    b = SampleBatch(np.zeros((10, 2, 2)))
    with pytest.raises(ShapeMismatch):
        smoothing_gap(a, b, [np.zeros(1)], SmoothingParams((0,), 1.0))


def test_params_validation():
    with pytest.raises(ValueError):
        SmoothingParams((0,), 0.0)
    with pytest.raises(ValueError):
        SmoothingParams((0,), 1.0, -1.0)
