import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nfhomog.micro import (CellSampled, LimitAtInfinity, TrigPoly, ball_average, besicovitch_seminorm,
                           eval_micro, mean_value, shift_micro, sup_norm, trace)
from nfhomog.profiles import Profile

COS = TrigPoly.cosine(1)
P = TrigPoly.cosine(1, 0.5, offset=1.0)


def test_eval_constant_and_zero_of_cosine():
    assert eval_micro(TrigPoly.constant(1.0), 0.37) == 1.0
    assert abs(eval_micro(COS, 0.25)) <= 1e-15


def test_limit_at_infinity_far_away():
    u = LimitAtInfinity(Profile("bump", 1.0, amplitude=0.0), 0.3)
    assert eval_micro(u, 1e6) == pytest.approx(0.3, abs=0)


def test_eval_rejects_nonfinite():
    with pytest.raises(ValueError):
        eval_micro(COS, np.nan)


def test_trace_examples():
    assert trace(COS, 0.5, 0.25) == pytest.approx(-1.0, abs=1e-15)
    assert trace(TrigPoly.constant(2.5), 0.1, 3.3) == 2.5
    assert trace(P, 1 / 8, 1 / 16) == pytest.approx(0.5, abs=1e-15)
    with pytest.raises(ValueError):
        trace(COS, 0.0, 1.0)
    with pytest.raises(ValueError):
        trace(COS, -0.1, 1.0)


def test_mean_values():
    assert mean_value(TrigPoly.constant(1.0)) == 1.0
    assert mean_value(COS) == 0.0
    assert abs(ball_average(P, 100.5) - mean_value(P)) <= 1e-2


def test_mean_of_cell_sampled_and_limit():
    vals = np.array([0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0])
    assert mean_value(CellSampled(vals)) == pytest.approx(3.5)
    u = LimitAtInfinity(Profile("bump", 1.0), -0.4)
    assert mean_value(u) == -0.4


def test_seminorm_examples():
    assert besicovitch_seminorm(TrigPoly.constant(-3.0), 2) == pytest.approx(3.0, abs=1e-14)
    assert besicovitch_seminorm(COS, 2) == pytest.approx(np.sqrt(0.5), abs=1e-14)
    y = (np.arange(4096) + 0.5) / 4096
    oracle = np.sqrt(np.mean((1 + 0.5 * np.cos(2 * np.pi * y)) ** 2))
    assert besicovitch_seminorm(P, 2) == pytest.approx(oracle, abs=1e-10)
    assert besicovitch_seminorm(P, 2) == pytest.approx(np.sqrt(9 / 8), abs=1e-10)
    with pytest.raises(ValueError):
        besicovitch_seminorm(P, 0.5)


def test_shift_examples():
    y = np.linspace(0, 1, 33)[:, None]
    np.testing.assert_allclose(shift_micro(COS, 0.5).evaluate(y), -COS.evaluate(y), atol=1e-15)
    c = TrigPoly.constant(0.7)
    assert np.all(shift_micro(c, 12.3).evaluate(y) == 0.7)
    assert mean_value(shift_micro(P, 0.137)) == mean_value(P)


def test_quasi_periodic_mean_is_exact_zero_frequency():
    q = TrigPoly.from_terms([((0, 0), 2.0, 0.0), ((1, -1), 1.0, 0.3), ((2, 1), 0.5, 0.0)],
                            generators=((1.0,), (np.sqrt(2.0),)))
    assert q.algebra.kind == "quasiPeriodic"
    assert q.algebra.spectrum_surrogate_dim == 2
    assert mean_value(q) == 2.0
    assert abs(ball_average(q, 100.5) - 2.0) <= 1e-2


def test_algebra_tags():
    assert P.algebra.kind == "periodic" and P.algebra.spectrum_surrogate_dim == 1
    assert CellSampled(np.ones(8)).algebra.kind == "periodic"
    assert LimitAtInfinity(Profile("bump", 1.0), 1.0).algebra.spectrum_surrogate_dim == 0


def test_cell_sampled_exact_at_nodes_and_periodic():
    rng = np.random.default_rng(1)
    v = rng.standard_normal(16)
    u = CellSampled(v)
    y = np.arange(16) / 16
    np.testing.assert_allclose(u.evaluate(y[:, None]), v, atol=1e-15)
    np.testing.assert_allclose(u.evaluate(y[:, None] + 3.0), v, atol=1e-13)


def test_real_trig_poly_requires_conjugate_symmetry():
    with pytest.raises(ValueError):
        TrigPoly(np.array([[1], [-1]]), np.array([1.0 + 1j, 1.0 + 1j]))


finite = st.floats(-100, 100, allow_nan=False)


@settings(max_examples=50, deadline=None)
@given(a=finite, b=finite, c1=finite, c2=finite)
def test_mean_is_linear(a, b, c1, c2):
    u = TrigPoly.from_terms([(0, c1, 0.0), (1, 1.0, 0.4)])
    v = TrigPoly.from_terms([(0, c2, 0.0), (2, 3.0, 0.1)])
    w = TrigPoly.from_terms([(0, a * c1 + b * c2, 0.0), (1, a, 0.4), (2, 3.0 * b, 0.1)])
    assert mean_value(w) == pytest.approx(a * mean_value(u) + b * mean_value(v), abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(a=finite)
def test_translation_invariance_all_variants(a):
    for u in (P, CellSampled(np.arange(8.0)), LimitAtInfinity(Profile("bump", 1.0), 0.2)):
        assert abs(mean_value(shift_micro(u, a)) - mean_value(u)) <= 1e-12


@settings(max_examples=30, deadline=None)
@given(eps=st.floats(1e-3, 2.0), x=st.floats(-50, 50))
def test_trace_bounded_by_sup(eps, x):
    for u in (P, COS, CellSampled(np.linspace(-1, 2, 8))):
        assert abs(trace(u, eps, x)) <= sup_norm(u) + 1e-12


def test_positivity_of_mean():
    u = CellSampled(np.abs(np.random.default_rng(3).standard_normal(32)))
    assert mean_value(u) >= 0
    assert mean_value(P) >= 0


def test_ball_average_error_decays_like_one_over_r():
    u = TrigPoly.cosine(1, 1.0, phase=0.3, offset=0.0)
    R = np.array([10.0, 20.0, 40.0, 80.0]) + 0.25
    err = np.array([abs(ball_average(u, r)) for r in R])
    C = np.max(err * R)
    assert np.all(err <= C / R + 1e-15)
    assert C < 1.0


def test_ball_average_2d():
    u = TrigPoly.from_terms([((0, 0), 1.0, 0.0), ((1, 1), 0.5, 0.0)], dim=2)
    assert abs(ball_average(u, 30.0) - 1.0) <= 1e-2
