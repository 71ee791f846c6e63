import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nfhomog.grid import CellGrid, MacroField, MacroGrid, TwoScaleField, integrate, lift, sample_trace
from nfhomog.micro import LimitAtInfinity, TrigPoly
from nfhomog.profiles import Profile
from nfhomog.sigma import (PairingReport, _report, TestFunction, TimeFactor, check_commensurate, convolution_limit_check,
                           default_family, fit_rate, holder_bound, is_commensurate, limit_pairing,
                           spacetime_limit_pairing, spacetime_pairing, strictly_decreasing, strong_sigma_check,
                           translate_limit_check, weak_sigma_pairing)

G = MacroGrid(1, 8.0, 2048)
CELL = CellGrid(1, 64)
COS = TrigPoly.cosine(1)
ONE = TrigPoly.constant(1.0)
A = Profile("gaussian", 0.3, center=(0.2,))
PHI = Profile("bump", 1.2, center=(0.37,))
EPS = [0.25, 0.125, 0.0625]


def test_commensurability():
    assert is_commensurate(0.25, MacroGrid(1, 8.0, 256))
    assert not is_commensurate(0.3, MacroGrid(1, 8.0, 256))
    with pytest.raises(ValueError):
        check_commensurate(0.3, MacroGrid(1, 8.0, 256))


def test_weak_pairing_examples():
    psi = TestFunction(PHI, COS)
    half = 0.5 * integrate(G.sample(lambda x: A(x) * PHI(x)))
    errs = [abs(weak_sigma_pairing(sample_trace(A, COS, e, G), psi, e) - half) for e in EPS]
    assert errs[0] > errs[1] > errs[2]
    u = G.sample(A)
    plain = integrate(G.sample(lambda x: A(x) * PHI(x)))
    for e in EPS:
        assert weak_sigma_pairing(u, TestFunction(PHI, ONE), e) == pytest.approx(plain, abs=1e-14)
    ones = G.sample(lambda x: np.ones_like(x))
    vals = [abs(weak_sigma_pairing(ones, psi, e)) for e in EPS]
    assert vals[-1] < 1e-6


def test_limit_pairing_examples():
    u0 = TwoScaleField.separable(G.sample(A), COS, CELL)
    psi = TestFunction(PHI, COS)
    half = 0.5 * integrate(G.sample(lambda x: A(x) * PHI(x)))
    assert limit_pairing(u0, psi) == pytest.approx(half, abs=1e-10)
    assert abs(limit_pairing(lift(G.sample(A), CELL), psi)) <= 1e-12


def test_limit_pairing_random_against_refined_quadrature():
    g, cell = MacroGrid(1, 8.0, 64), CellGrid(1, 16)
    rng = np.random.default_rng(0)
    u0 = TwoScaleField(g, cell, rng.standard_normal(g.shape + cell.shape))
    w = TrigPoly.from_terms([(0, 0.3, 0.0), (1, 1.0, 0.2), (2, 0.4, -1.0)])
    psi = TestFunction(PHI, w)
    # the same sum written out with independently evaluated factors
    phi = PHI(g.nodes())
    y = np.arange(16) / 16
    wy = 0.3 + np.cos(2 * np.pi * y + 0.2) + 0.4 * np.cos(4 * np.pi * y - 1.0)
    oracle = g.h / 16 * np.einsum("ij,i,j->", u0.values, phi, wy)
    assert limit_pairing(u0, psi) == pytest.approx(oracle, abs=1e-10)


def test_limit_pairing_limit_at_infinity_and_quasi():
    u0 = lift(G.sample(A), CELL)
    w = LimitAtInfinity(Profile("bump", 0.5), 0.3)
    assert limit_pairing(u0, TestFunction(PHI, w)) == pytest.approx(0.3 * integrate(G.sample(lambda x: A(x) * PHI(x))))
    q = TrigPoly.from_terms([((1, 0), 1.0, 0.0)], generators=((1.0,), (np.sqrt(2.0),)))
    with pytest.raises(ValueError):
        limit_pairing(u0, TestFunction(PHI, q))


def test_exact_phase_consistency():
    # u_eps = phi-type product samples: pairing is a closed-form Riemann sum
    psi = TestFunction(PHI, COS)
    for e in EPS:
        u = sample_trace(A, COS, e, G)
        direct = G.h * np.sum(A(G.nodes()) * PHI(G.nodes()) * np.cos(2 * np.pi * G.nodes() / e) ** 2)
        assert weak_sigma_pairing(u, psi, e) == pytest.approx(direct, abs=1e-10)


def test_strong_sigma_examples():
    fam = default_family([PHI], 1, 1)
    m = TrigPoly.cosine(1, 0.5, offset=1.0)
    seq = {e: sample_trace(A, m, e, G) for e in EPS}
    u0 = TwoScaleField.separable(G.sample(A), m, CELL)
    rep = strong_sigma_check(seq, u0, 2, fam)
    assert rep.passed and rep.norm_gaps[-1] < 1e-6

    noise = np.where(np.arange(G.M) % 2 == 0, 0.3, -0.3)
    seq = {e: G.sample(A) + MacroField(G, noise) for e in EPS}
    rep = strong_sigma_check(seq, lift(G.sample(A), CELL), 2, fam)
    assert rep.weak_passed and not rep.norm_passed and not rep.passed

    seq = {e: G.sample(A) for e in EPS}
    rep = strong_sigma_check(seq, lift(G.sample(A), CELL), 2, fam)
    assert rep.passed and max(rep.norm_gaps) < 1e-12


def test_translate_examples():
    a = G.sample(A)
    u0 = TwoScaleField.separable(a, COS, CELL)
    seq = {e: sample_trace(A, COS, e, G) for e in (1.0, 0.5, 0.25)}
    psi = TestFunction(PHI, COS)
    rep0 = translate_limit_check(seq, u0, 0.0, psi)
    assert rep0.pairings == [weak_sigma_pairing(u, psi, e) for e, u in seq.items()]
    rep = translate_limit_check(seq, u0, 1.0, psi)
    shifted = TwoScaleField.separable(G.sample(lambda x: A(x + 1.0)), COS, CELL)
    assert rep.limit == pytest.approx(limit_pairing(shifted, psi), abs=1e-14)
    bad = {1 / (n + 0.5): sample_trace(A, COS, 16 / 32, G) for n in (1,)}
    with pytest.raises(ValueError):
        translate_limit_check(bad, u0, 1.0, psi)


def test_convolution_limit_examples():
    g = MacroGrid(1, 8.0, 2048)
    p = TrigPoly.cosine(1, 0.5, offset=1.0)
    a, b = Profile("gaussian", 0.5), Profile("gaussian", 0.7, center=(0.3,))
    eps = [0.25, 0.125, 0.0625, 0.03125]
    U = {e: sample_trace(a, p, e, g) for e in eps}
    V = {e: sample_trace(b, p, e, g) for e in eps}
    u0 = TwoScaleField.separable(g.sample(a), p, CELL)
    v0 = TwoScaleField.separable(g.sample(b), p, CELL)
    psi = TestFunction(Profile("bump", 1.0, center=(0.37,)), COS)
    rep = convolution_limit_check(U, V, u0, v0, psi)
    assert rep.passed and np.isfinite(rep.rate)

    d = np.zeros(g.shape)
    d[g.origin_index] = 1 / g.h
    D = MacroField(g, d)
    Dd = {e: D for e in eps}
    rep = convolution_limit_check(U, Dd, u0, lift(D, CELL), psi)
    assert rep.pairings == pytest.approx([weak_sigma_pairing(U[e], psi, e) for e in eps], abs=1e-12)
    Z = {e: g.zeros() for e in eps}
    rep = convolution_limit_check(Z, V, lift(g.zeros(), CELL), v0, psi)
    assert all(p == 0 for p in rep.pairings)


def test_spacetime_examples():
    u = G.sample(A)
    psi = TestFunction(PHI, COS)
    times = np.linspace(0, 2, 21)
    st_val = spacetime_pairing(times, [u] * 21, psi, 0.25)
    assert st_val == pytest.approx(2.0 * weak_sigma_pairing(u, psi, 0.25), rel=1e-12)
    assert spacetime_pairing(times, [G.zeros()] * 21, psi, 0.25) == 0.0
    chi = TimeFactor("cosine", omega=np.pi)
    psi_t = TestFunction(PHI, ONE, chi)
    lim = spacetime_limit_pairing(times, [lift(u, CELL)] * 21, psi_t)
    assert abs(lim) < 1e-12 * abs(integrate(G.sample(lambda x: A(x) * PHI(x)))) + 1e-14
    with pytest.raises(ValueError):
        spacetime_pairing(np.array([0.0, 0.1, 0.3]), [u] * 3, psi, 0.25)


def test_spacetime_magnitude_bounds_pairing():
    rng = np.random.default_rng(3)
    times = np.linspace(0, 1, 11)
    states = [MacroField(G, rng.standard_normal(G.shape)) for _ in times]
    psi = TestFunction(PHI, COS, TimeFactor("cosine", omega=np.pi))
    val = spacetime_pairing(times, states, psi, 0.25)
    mag = spacetime_pairing(times, states, psi, 0.25, magnitude=True)
    assert 0 <= abs(val) <= mag
    pos = [MacroField(G, np.abs(s.values)) for s in states]
    psi_pos = TestFunction(PHI, ONE)
    assert spacetime_pairing(times, pos, psi_pos, 0.25, magnitude=True) == pytest.approx(
        spacetime_pairing(times, pos, psi_pos, 0.25), rel=1e-12)


def test_spacetime_pairing_against_refined_time_quadrature():
    from nfhomog.fixtures import scalar_ode_fixture
    from nfhomog.oracles import scalar_ode_oracle
    from nfhomog.model import kernel_mass
    from nfhomog.solver import picard_solve
    fx = scalar_ode_fixture()
    sol = picard_solve(fx.J, fx.f, 1.0, fx.u0, fx.tg)
    grid = fx.u0.grid
    psi = TestFunction(Profile("bump", 2.0), ONE)
    # same pairing with the output states replaced by the oracle on a 10x finer time mesh
    fine = np.linspace(0.0, 2.0, 201)
    traj = scalar_ode_oracle(kernel_mass(fx.J, 1.0, grid), fx.f.h, 0.2, fine)
    phi_int = integrate(grid.sample(psi.phi))
    w = np.full(fine.size, fine[1]); w[0] = w[-1] = 0.5 * fine[1]
    ref = phi_int * float(np.dot(w, traj))
    val = spacetime_pairing(sol.times, sol.states, psi, 1.0)
    # the 21-point trapezoid differs from the refined one by its own quadrature error
    coarse = phi_int * float(np.dot(np.r_[0.05, np.full(19, 0.1), 0.05], scalar_ode_oracle(
        kernel_mass(fx.J, 1.0, grid), fx.f.h, 0.2, sol.times)))
    assert val == pytest.approx(coarse, abs=1e-8)
    assert abs(val - ref) < 1e-3


def test_default_family_shape():
    fam = default_family([PHI], 1, 2)
    assert [p.label for p in fam] == ["phi0*1", "phi0*cos[1]", "phi0*sin[1]", "phi0*cos[2]", "phi0*sin[2]"]
    assert len(default_family([PHI], 2, 2)) == 25


def test_test_function_rejects_unbounded_micro():
    class Unbounded(TrigPoly):
        def sup_bound(self):
            return np.inf
    u = Unbounded.cosine(1)
    with pytest.raises(ValueError):
        TestFunction(PHI, u)


def test_report_csv_and_rate():
    rep = PairingReport([0.5, 0.25], [1.0, 1.1], 1.2, [0.2, 0.1], 1.0, True, "x")
    lines = rep.to_csv().splitlines()
    assert lines[0] == "eps,pairing,limit,abs_error" and len(lines) == 3
    assert fit_rate([1, 0.5, 0.25, 0.125], [9.0, 1.0, 0.25, 0.0625]) == pytest.approx(2.0)
    assert strictly_decreasing([3, 2, 1]) and not strictly_decreasing([3, 3, 1])
    assert strictly_decreasing([1, 2, 1], skip_first=True) and not strictly_decreasing([1, 2, 1])
    assert strictly_decreasing([5, 1e-20, 2e-20], floor=1e-18)


def test_report_floor_uses_integrand_scale():
    # a pairing that cancels to zero: noise-level errors pass only against the integrand scale
    eps = [0.5, 0.25, 0.125]
    noise = [2e-18, 1e-18, 1.6e-18]
    assert not _report(eps, noise, 0.0, "z").passed
    assert _report(eps, noise, 0.0, "z", scale=1.0).passed
    assert not _report(eps, [1e-3, 1e-4, 2e-4], 0.0, "z", scale=1.0).passed


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), a=st.floats(-5, 5), b=st.floats(-5, 5))
def test_linearity_and_holder(seed, a, b):
    rng = np.random.default_rng(seed)
    g = MacroGrid(1, 8.0, 256)
    u, v = (MacroField(g, rng.standard_normal(g.shape)) for _ in range(2))
    psi = TestFunction(PHI, COS)
    lhs = weak_sigma_pairing(u * a + v * b, psi, 0.25)
    rhs = a * weak_sigma_pairing(u, psi, 0.25) + b * weak_sigma_pairing(v, psi, 0.25)
    assert lhs == pytest.approx(rhs, abs=1e-12 * (1 + abs(a) + abs(b)) * 10)
    val, bound = holder_bound(u, psi, 0.25)
    assert val <= bound * (1 + 1e-12)
