import numpy as np
import pytest

from nfhomog.fixtures import decay_fixture, homog_direct_fixture, plane_wave_fixture, scalar_ode_fixture
from nfhomog.grid import CellGrid, MacroField, MacroGrid, lp_norm
from nfhomog.micro import TrigPoly
from nfhomog.model import FiringRate, KernelSpec, Sigmoid, kernel_mass
from nfhomog.oracles import scalar_ode_oracle
from nfhomog.profiles import Profile
from nfhomog.solver import (BlowUpError, ConfigurationError, ConvergenceFailure, NonContractionError,
                            PicardConfig, TimeGrid, apriori_monitor, homog_solve, picard_solve, rk4_solve,
                            run_picard, run_rk4)

FIXTURES = {"decay": decay_fixture, "plane_wave": plane_wave_fixture, "scalar_ode": scalar_ode_fixture}


@pytest.fixture(scope="module", params=sorted(FIXTURES))
def solved(request):
    fx = FIXTURES[request.param]()
    return fx, picard_solve(fx.J, fx.f, fx.eps, fx.u0, fx.tg, PicardConfig()), rk4_solve(fx.J, fx.f, fx.eps, fx.u0, fx.tg)


def sup_err(states, oracle):
    return max(lp_norm(a - b, 2) for a, b in zip(states, oracle))


def test_fixture_oracles(solved):
    fx, p, r = solved
    assert sup_err(p.states, fx.oracle) <= fx.tol_picard
    assert sup_err(r.states, fx.oracle) <= fx.tol_rk4
    assert sup_err(p.states, r.states) <= 1e-6


def test_pointwise_decay_error():
    fx = decay_fixture()
    sol = picard_solve(fx.J, fx.f, fx.eps, fx.u0, fx.tg)
    assert max(np.max(np.abs(a.values - b.values)) for a, b in zip(sol.states, fx.oracle)) <= 1e-6


def test_report_contents(solved):
    fx, p, r = solved
    rep = p.report
    assert rep.integrator == "picard" and len(rep.sweeps) == len(rep.ratios)
    assert all(x >= 0 for rs in rep.ratios for x in rs)
    assert rep.max_ratio <= rep.contraction_bound + 0.05
    assert rep.l1.shape == (fx.tg.n_steps + 1,)
    assert "wall_time" not in rep.records()
    assert len(p.states) == len(fx.tg.output_steps())


def test_time_grid_validation():
    with pytest.raises(ValueError):
        TimeGrid(1.0, 0.3)
    with pytest.raises(ValueError):
        TimeGrid(1.0, 2.0)
    assert TimeGrid(1.0, 0.1, 3).output_steps() == [0, 3, 6, 9, 10]


def test_contraction_condition_enforced():
    fx = scalar_ode_fixture()
    k1 = fx.f.k1
    with pytest.raises(ConfigurationError, match=r"2\(k1\+1\)rho < 1"):
        picard_solve(fx.J, fx.f, 1.0, fx.u0, fx.tg, PicardConfig(rho=1.0 / (k1 + 1)))
    assert PicardConfig().resolve(k1) == pytest.approx(0.9 / (2 * (k1 + 1)))


class _Steep:
    """Linear right-hand side with a large Lipschitz constant."""

    def __init__(self, lam):
        self.lam = lam

    def rhs(self, values):
        with np.errstate(over="ignore", invalid="ignore"):
            return self.lam * values


def test_non_contraction_detected():
    y0 = np.ones(8)
    # declared k1 = 0 allows rho = 0.45; the real Lipschitz constant is 50
    with pytest.raises(NonContractionError):
        run_picard(_Steep(50.0), y0, TimeGrid(1.0, 0.01), PicardConfig(rho=0.45), 0.0, 1.0)


def test_sweep_budget_exhausted():
    with pytest.raises(ConvergenceFailure):
        run_picard(_Steep(0.5), np.ones(8), TimeGrid(1.0, 0.01), PicardConfig(max_sweeps=2, tol=1e-14), 0.0, 1.0)


def test_blow_up_guard():
    with pytest.raises(BlowUpError):
        run_rk4(_Steep(1e300), np.ones(4), TimeGrid(1.0, 0.5), 1.0)


def test_nonnegativity():
    g = MacroGrid(1, 8.0, 256)
    P = TrigPoly.cosine(1, 0.5, offset=1.0)
    J = KernelSpec.normalized([(Profile("gaussian", 0.5, cutoff=3.0), P)], g, [0.25], 0.9)
    f = FiringRate(P, Sigmoid(2.0, 0.5))
    u = g.sample(Profile("bump", 1.5))
    for sol in (picard_solve(J, f, 0.25, u, TimeGrid(1.0, 1e-2, 10)), rk4_solve(J, f, 0.25, u, TimeGrid(1.0, 1e-2, 10))):
        assert min(s.values.min() for s in sol.states) >= -1e-10


def test_time_step_convergence_orders():
    g = MacroGrid(1, 8.0, 64)
    h = Sigmoid(2.0, 0.5)
    J = KernelSpec.normalized([(Profile("gaussian", 0.5, cutoff=3.0), TrigPoly.constant(1.0))], g, [1.0], 0.8)
    f = FiringRate(TrigPoly.constant(1.0), h)
    u = g.sample(lambda x: np.full_like(x, 0.2))
    a = kernel_mass(J, 1.0, g)
    exact = scalar_ode_oracle(a, h, 0.2, [0.0, 2.0])[-1]
    errs = {}
    for integ in ("rk4", "picard"):
        e = []
        for dt in (0.1, 0.05):
            tg = TimeGrid(2.0, dt, round(2.0 / dt))
            pc = PicardConfig(tol=1e-13)
            sol = rk4_solve(J, f, 1.0, u, tg) if integ == "rk4" else picard_solve(J, f, 1.0, u, tg, pc)
            e.append(abs(sol.states[-1].values[0] - exact))
        errs[integ] = e[0] / e[1]
    assert 12 <= errs["rk4"] <= 20
    assert errs["picard"] >= 2


def test_homog_y_degenerate_collapse():
    g, cell = MacroGrid(1, 8.0, 256), CellGrid(1, 8)
    one = TrigPoly.constant(1.0)
    J = KernelSpec.normalized([(Profile("gaussian", 0.5, cutoff=3.0), one)], g, [1.0], 0.9)
    f = FiringRate(one, Sigmoid(2.0, 0.5))
    u = g.sample(Profile("bump", 1.5))
    tg = TimeGrid(1.0, 1e-3, 100)
    hom = homog_solve(J, f, u, tg, PicardConfig(), cell)
    het = picard_solve(J, f, 0.25, u, tg, PicardConfig())
    for a, b in zip(hom.states, het.states):
        assert np.max(np.abs(a.values - a.values[:, :1])) == 0.0
        assert np.max(np.abs(a.values[:, 0] - b.values)) <= 1e-10


def test_homog_zero_firing_decay():
    g, cell = MacroGrid(1, 8.0, 64), CellGrid(1, 8)
    J = KernelSpec([(Profile("gaussian", 0.5, cutoff=3.0), TrigPoly.constant(1.0))], 0.5)
    f = FiringRate(TrigPoly.constant(0.0), Sigmoid(2.0, 0.5))
    u = g.sample(Profile("gaussian", 1.0))
    sol = homog_solve(J, f, u, TimeGrid(1.0, 1e-3, 250), PicardConfig(), cell, "rk4")
    for t, s in zip(sol.times, sol.states):
        np.testing.assert_allclose(s.values, np.exp(-t) * u.values[:, None] * np.ones(8), atol=1e-12)


def test_homog_direct_fixture():
    J, f, u0, cell, tg, oracle = homog_direct_fixture()
    r = homog_solve(J, f, u0, tg, PicardConfig(), cell, "rk4")
    assert max(np.max(np.abs(s.values - o)) for s, o in zip(r.states, oracle)) <= 1e-8
    p = homog_solve(J, f, u0, tg, PicardConfig(), cell, "picard")
    assert max(np.max(np.abs(s.values - o)) for s, o in zip(p.states, oracle)) <= 1e-6


def test_apriori_examples():
    fx = decay_fixture()
    sol = picard_solve(fx.J, fx.f, 1.0, fx.u0, fx.tg)
    rep = apriori_monitor(sol, fx.f)
    assert rep.passed
    np.testing.assert_allclose(rep.l2, np.exp(-sol.times) * rep.l2[0], rtol=1e-6)

    fx = scalar_ode_fixture()
    sol = picard_solve(fx.J, fx.f, 1.0, fx.u0, fx.tg)
    assert apriori_monitor(sol, fx.f).passed

    g = MacroGrid(1, 8.0, 64)
    sol = rk4_solve(fx.J, fx.f, 1.0, g.zeros(), fx.tg)
    rep = apriori_monitor(sol, fx.f)
    assert rep.passed
    # forced decay toward mass * h(.) stays below the ODE bound sup h * mass
    a = kernel_mass(fx.J, 1.0, g)
    assert max(np.max(np.abs(s.values)) for s in sol.states) <= a + 1e-12


def test_apriori_reports_violations():
    fx = scalar_ode_fixture()
    sol = picard_solve(fx.J, fx.f, 1.0, fx.u0, fx.tg)
    rep = apriori_monitor(sol, fx.f, c1=0.0)
    # with c1 forced to zero the bound is exp(1.5 k1 t)||u0||, still satisfied here
    assert rep.passed
    bad = sol.__class__(sol.times, [s * 100.0 if k else s for k, s in enumerate(sol.states)], sol.report, sol.eps)
    assert not apriori_monitor(bad, fx.f).passed
