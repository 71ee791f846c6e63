import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nfhomog.convolve import (ConvPlan, cell_conv, conv_direct, conv_macro, double_conv, double_conv_direct,
                              young_check)
from nfhomog.grid import CellGrid, GridMismatchError, MacroField, MacroGrid, TwoScaleField, cell_mean, integrate
from nfhomog.profiles import Profile

G1 = MacroGrid(1, 8.0, 64)
G2 = MacroGrid(2, 8.0, 32)


def rnd(grid, seed):
    return MacroField(grid, np.random.default_rng(seed).standard_normal(grid.shape))


def delta(grid):
    v = np.zeros(grid.shape)
    v[(grid.origin_index,) * grid.dim] = 1.0 / grid.cell_volume
    return MacroField(grid, v)


def test_delta_is_identity():
    for g in (G1, G2):
        u = rnd(g, 0)
        np.testing.assert_allclose(conv_macro(delta(g), u).values, u.values, atol=1e-12)
        np.testing.assert_allclose(conv_direct(delta(g), u).values, u.values, atol=1e-12)


def test_indicator_hat_peak():
    g = MacroGrid(1, 8.0, 512)
    box = g.sample(Profile("indicator", 0.5))
    peak = conv_macro(box, box).values[g.origin_index]
    assert abs(peak - 1.0) <= 2 * g.h


def test_gaussian_self_convolution_against_direct():
    g = MacroGrid(1, 8.0, 256)
    u = g.sample(Profile("gaussian", 0.5))
    fast = conv_macro(u, u).values
    np.testing.assert_allclose(fast, conv_direct(u, u).values, atol=1e-10)
    # closed form: sqrt(pi s^2) * exp(-x^2 / (4 s^2)) with s = 0.5
    x = g.nodes()
    np.testing.assert_allclose(fast, np.sqrt(np.pi * 0.25) * np.exp(-x ** 2), atol=1e-10)


def test_fft_matches_direct_randomized():
    for seed in range(100):
        u, v = rnd(G1, seed), rnd(G1, seed + 1000)
        a, b = conv_macro(u, v).values, conv_direct(u, v).values
        assert np.max(np.abs(a - b)) <= 1e-12 * np.max(np.abs(b))
    for seed in range(20):
        u, v = rnd(G2, seed), rnd(G2, seed + 1000)
        a, b = conv_macro(u, v).values, conv_direct(u, v).values
        assert np.max(np.abs(a - b)) <= 1e-12 * np.max(np.abs(b))


def test_direct_commutative_and_capped():
    u, v = rnd(G1, 1), rnd(G1, 2)
    np.testing.assert_allclose(conv_direct(u, v).values, conv_direct(v, u).values, atol=1e-13)
    big = MacroGrid(1, 8.0, 8192)
    with pytest.raises(ValueError):
        conv_direct(big.zeros(), big.zeros())


def test_grid_mismatch():
    with pytest.raises(GridMismatchError):
        conv_macro(rnd(G1, 0), rnd(MacroGrid(1, 4.0, 64), 0))


def test_plan_reuse_and_batches():
    k = rnd(G1, 3)
    plan = ConvPlan(k)
    batch = np.stack([rnd(G1, s).values for s in range(5)])
    out = plan.apply(batch)
    for i in range(5):
        np.testing.assert_allclose(out[i], conv_macro(k, MacroField(G1, batch[i])).values, atol=1e-12)


def test_mass_multiplicativity_and_positivity():
    g = MacroGrid(1, 8.0, 256)
    u = g.sample(Profile("bump", 1.2, center=(0.5,)))
    v = g.sample(Profile("indicator", 0.7))
    w = conv_macro(u, v)
    assert integrate(w) == pytest.approx(integrate(u) * integrate(v), abs=1e-10)
    assert w.values.min() >= -1e-13


M_G, M_C = MacroGrid(1, 8.0, 32), CellGrid(1, 16)


def rnd2(seed, positive=False):
    v = np.random.default_rng(seed).standard_normal(M_G.shape + M_C.shape)
    return TwoScaleField(M_G, M_C, np.abs(v) if positive else v)


def test_double_conv_separable_factorization():
    rng = np.random.default_rng(0)
    a, b = rnd(M_G, 4), rnd(M_G, 5)
    p, q = rng.standard_normal(16), rng.standard_normal(16)
    lhs = double_conv(TwoScaleField.separable(a, p, M_C), TwoScaleField.separable(b, q, M_C))
    rhs = TwoScaleField.separable(conv_macro(a, b), cell_conv(p, q), M_C)
    np.testing.assert_allclose(lhs.values, rhs.values, atol=1e-11 * np.abs(rhs.values).max())


def test_double_conv_delta_and_direct():
    d = np.zeros(M_G.shape + M_C.shape)
    d[M_G.origin_index, 0] = 1.0 / (M_G.cell_volume / M_C.M)
    D = TwoScaleField(M_G, M_C, d)
    v = rnd2(1)
    np.testing.assert_allclose(double_conv(D, v).values, v.values, atol=1e-12)
    u = rnd2(2)
    np.testing.assert_allclose(double_conv(u, v).values, double_conv_direct(u, v).values, atol=1e-10)


def test_double_conv_fubini_on_cell_means():
    u = rnd2(3)
    v0 = TwoScaleField.separable(rnd(M_G, 6), np.ones(16), M_C)
    lhs = cell_mean(double_conv(u, v0)).values
    rhs = conv_macro(cell_mean(u), cell_mean(v0)).values
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_young_examples():
    r = young_check(rnd2(7, True), rnd2(8, True), 1)
    assert r.passed and r.lhs == pytest.approx(r.rhs, rel=1e-10)
    assert young_check(rnd2(9), rnd2(10), 2).passed
    z = TwoScaleField(M_G, M_C, np.zeros(M_G.shape + M_C.shape))
    r = young_check(rnd2(11), z, 2)
    assert r.lhs == 0 and r.rhs == 0 and r.passed
    with pytest.raises(ValueError):
        young_check(z, z, 3)


coef = st.floats(-10, 10, allow_nan=False)


@settings(max_examples=30, deadline=None)
@given(a=coef, b=coef, seed=st.integers(0, 10_000))
def test_bilinear_and_commutative(a, b, seed):
    u, v, w = rnd(G1, seed), rnd(G1, seed + 1), rnd(G1, seed + 2)
    lhs = conv_macro(u * a + v * b, w).values
    rhs = a * conv_macro(u, w).values + b * conv_macro(v, w).values
    np.testing.assert_allclose(lhs, rhs, atol=1e-12 * (1 + abs(a) + abs(b)) * 50)
    np.testing.assert_allclose(conv_macro(u, w).values, conv_macro(w, u).values, atol=1e-12 * 50)
    U, V = rnd2(seed), rnd2(seed + 1)
    np.testing.assert_allclose(double_conv(U, V).values, double_conv(V, U).values, atol=1e-12 * 50)
