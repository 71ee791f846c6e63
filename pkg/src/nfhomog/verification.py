"""Invariant suites behind the ``verify`` and ``oracle`` modes.

Every check returns a :class:`CheckResult`; the suites are plain functions
so the test-suite can call them one by one.
"""
from __future__ import annotations

import csv
import io
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .convolve import cell_conv, conv_direct, conv_macro, double_conv, young_check
from .fixtures import decay_fixture, homog_direct_fixture, plane_wave_fixture, scalar_ode_fixture
from .grid import (CellGrid, MacroField, MacroGrid, TwoScaleField, _atomic_write, cell_mean, lp_norm,
                   read_field, sample_trace, write_field)
from .micro import TrigPoly, ball_average, mean_value, shift_micro
from .model import KernelSpec, hetero_rhs, kernel_mass
from .oracles import hetero_rhs_direct
from .profiles import Profile
from .sigma import convolution_limit_check, default_family, is_commensurate, translate_limit_check
from .solver import ConfigurationError, PicardConfig, TimeGrid, homog_solve, picard_solve, rk4_solve

__all__ = [
    "CheckResult",
    "convolution_suite",
    "micro_suite",
    "grid_suite",
    "model_suite",
    "contraction_check",
    "integrator_suite",
    "homog_direct_check",
    "separable_fixture",
    "convolution_limit_suite",
    "translate_suite",
    "run_suites",
    "write_results",
]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float = float("nan")
    tol: float = float("nan")
    detail: str = ""
    seconds: float = 0.0


def _rel(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


def _timed(fn):
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        out = fn(*args, **kwargs)
        dt = time.perf_counter() - t0
        return [CheckResult(r.name, r.passed, r.value, r.tol, r.detail, dt) for r in out]
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


# convolution -----------------------------------------------------------------

@_timed
def convolution_suite(seed: int = 0, n1: int = 100, n2: int = 20) -> list:
    """FFT against direct summation, separability of the double convolution,
    Young's inequality and circular-vs-padded agreement."""
    rng = np.random.default_rng(seed)
    out = []
    g1 = MacroGrid(1, 8.0, 64)
    worst = 0.0
    for _ in range(n1):
        u = MacroField(g1, rng.standard_normal(g1.shape))
        v = MacroField(g1, rng.standard_normal(g1.shape))
        worst = max(worst, _rel(conv_macro(u, v).values, conv_direct(u, v).values))
    out.append(CheckResult("conv_macro vs conv_direct, 1D M=64", worst <= 1e-12, worst, 1e-12,
                           f"{n1} random fields"))
    g2 = MacroGrid(2, 8.0, 32)
    worst = 0.0
    for _ in range(n2):
        u = MacroField(g2, rng.standard_normal(g2.shape))
        v = MacroField(g2, rng.standard_normal(g2.shape))
        worst = max(worst, _rel(conv_macro(u, v).values, conv_direct(u, v).values))
    out.append(CheckResult("conv_macro vs conv_direct, 2D M=32", worst <= 1e-12, worst, 1e-12,
                           f"{n2} random fields"))

    cell = CellGrid(1, 16)
    gs = MacroGrid(1, 8.0, 64)
    worst = 0.0
    for _ in range(10):
        a, b = (MacroField(gs, rng.standard_normal(gs.shape)) for _ in range(2))
        p, q = rng.standard_normal(cell.shape), rng.standard_normal(cell.shape)
        lhs = double_conv(TwoScaleField.separable(a, p, cell), TwoScaleField.separable(b, q, cell))
        rhs = TwoScaleField.separable(conv_macro(a, b), cell_conv(p, q), cell)
        worst = max(worst, _rel(lhs.values, rhs.values))
    out.append(CheckResult("double_conv vs separable factorization", worst <= 1e-11, worst, 1e-11))

    u0 = TwoScaleField(gs, cell, rng.standard_normal(gs.shape + cell.shape))
    v0 = TwoScaleField(gs, cell, rng.standard_normal(gs.shape + cell.shape))
    ok = all(young_check(u0, v0, p).passed for p in (1, 2))
    out.append(CheckResult("Young inequality for **", ok))

    # compactly supported inside [-L/2, L/2): circular equals linear convolution
    g = MacroGrid(1, 8.0, 256)
    u = g.sample(Profile("bump", 1.7, center=(0.4,)))
    v = g.sample(Profile("indicator", 2.1, center=(-0.3,)))
    circ = conv_macro(u, v).values
    # node i of the output sits at x_i = x_{j} + x_{k}; with the origin at M/2
    # the full linear convolution index j + k maps to i = j + k - M/2
    full = g.cell_volume * np.convolve(u.values, v.values)
    lin = full[g.M // 2: g.M // 2 + g.M]
    err = float(np.max(np.abs(circ - lin)))
    out.append(CheckResult("circular vs zero-padded convolution", err <= 1e-12, err, 1e-12,
                           "supports inside half the box"))
    return out


# mean values -----------------------------------------------------------------

def _default_micros(cfg=None) -> dict:
    if cfg is None:
        from .experiment import default_config
        cfg = default_config()
    out = {"g": cfg.firing().g}
    for k, (_, w) in enumerate(cfg.kernel_terms()):
        out[f"P{k}"] = w
    return out


@_timed
def micro_suite(seed: int = 0, cfg=None) -> list:
    rng = np.random.default_rng(seed)
    out = []
    one = TrigPoly.constant(1.0)
    out.append(CheckResult("M(1) == 1", mean_value(one) == 1.0, mean_value(one), 0.0))
    micros = _default_micros(cfg)
    quasi = TrigPoly.from_terms([((0, 0), 1.0, 0.0), ((1, 0), 0.5, 0.0), ((0, 1), 0.3, 0.7)],
                                generators=((1.0,), (np.sqrt(2.0),)))
    micros["quasi"] = quasi
    worst = 0.0
    for w in micros.values():
        m = mean_value(w)
        for a in rng.uniform(-50, 50, size=(20, w.dim)):
            worst = max(worst, abs(mean_value(shift_micro(w, a)) - m))
    out.append(CheckResult("translation invariance of M", worst <= 1e-12, worst, 1e-12))
    for name, w in micros.items():
        if w.dim > 2:
            continue
        avg = ball_average(w, 100.5)
        err = abs(avg - mean_value(w))
        out.append(CheckResult(f"ball average at R=100.5 ({name})", err <= 1e-2, err, 1e-2))
    return out


# grid and I/O ----------------------------------------------------------------

@_timed
def grid_suite(seed: int = 0) -> list:
    rng = np.random.default_rng(seed)
    out = []
    g = MacroGrid(1, 8.0, 256)
    out.append(CheckResult("eps=0.3 rejected on L=8, M=256", not is_commensurate(0.3, g)))
    out.append(CheckResult("eps=1/4 accepted on L=8, M=256", is_commensurate(0.25, g)))
    cell = CellGrid(1, 8)
    fields = [MacroField(g, rng.standard_normal(g.shape)),
              TwoScaleField(MacroGrid(2, 4.0, 16), CellGrid(2, 8), rng.standard_normal((16, 16, 8, 8)))]
    ok = True
    with tempfile.TemporaryDirectory() as tmp:
        for k, fld in enumerate(fields):
            p = write_field(Path(tmp) / f"f{k}.nfh", fld, {"seed": seed})
            back = read_field(p)
            ok &= type(back) is type(fld) and back.values.tobytes() == fld.values.tobytes()
    out.append(CheckResult("binary round trip is bit-exact", bool(ok)))
    a = MacroField(g, rng.standard_normal(g.shape))
    u0 = TwoScaleField.separable(a, np.ones(cell.shape), cell)
    err = float(np.max(np.abs(cell_mean(u0).values - a.values)))
    out.append(CheckResult("cell mean of a y-constant field", err <= 1e-15, err, 1e-15))
    return out


# model -----------------------------------------------------------------------

@_timed
def model_suite(cfg=None) -> list:
    from .experiment import default_config
    cfg = cfg or default_config()
    out = []
    J, f = cfg.kernel(), cfg.firing()
    masses = [kernel_mass(J, e, cfg.macro) for e in cfg.eps]
    out.append(CheckResult("kernel mass <= 1 on the schedule", max(masses) <= 1 + 1e-12, max(masses), 1.0))
    k1_expected = f.g.sup_bound() * f.h.lipschitz
    out.append(CheckResult("k1 = sup g * Lip h", abs(f.k1 - k1_expected) <= 1e-12 * k1_expected, f.k1))
    # FFT right-hand side against the dense quadrature on a small grid
    small = MacroGrid(1, 8.0, 256)
    Js = KernelSpec.normalized(cfg.kernel_terms(), small, [0.25], target_mass=0.9)
    u = small.sample(Profile("bump", 1.5))
    err = _rel(hetero_rhs(Js, f, 0.25, u).values, hetero_rhs_direct(Js, f, 0.25, u).values)
    out.append(CheckResult("hetero rhs: FFT vs dense quadrature", err <= 1e-12, err, 1e-12))
    return out


# solvers ---------------------------------------------------------------------

@_timed
def contraction_check(cfg=None, eps: float | None = None) -> list:
    """Observed sweep ratios against ``2(k1+1)rho + 0.05`` on the default model."""
    from .experiment import default_config
    cfg = cfg or default_config()
    eps = cfg.eps[-1] if eps is None else eps
    J, f, tg = cfg.kernel(), cfg.firing(), cfg.time_grid
    u = cfg.macro.sample(cfg.initial_profile())
    sol = picard_solve(J, f, eps, u, tg, PicardConfig())
    rep = sol.report
    out = [CheckResult(f"Picard sweep ratio <= 2(k1+1)rho + 0.05 (eps={eps})",
                       rep.max_ratio <= rep.contraction_bound + 0.05, rep.max_ratio,
                       rep.contraction_bound + 0.05, f"{len(rep.sweeps)} windows")]
    bad = 1.0 / (f.k1 + 1.0)
    try:
        picard_solve(J, f, eps, u, TimeGrid(0.01, tg.dt, 1), PicardConfig(rho=bad))
        out.append(CheckResult("rho = 1/(k1+1) rejected", False, detail="no error raised"))
    except ConfigurationError as exc:
        out.append(CheckResult("rho = 1/(k1+1) rejected", "2(k1+1)rho < 1" in str(exc), detail=str(exc)))
    return out


@_timed
def integrator_suite() -> list:
    out = []
    for fx in (decay_fixture(), plane_wave_fixture(), scalar_ode_fixture()):
        p = picard_solve(fx.J, fx.f, fx.eps, fx.u0, fx.tg, PicardConfig())
        r = rk4_solve(fx.J, fx.f, fx.eps, fx.u0, fx.tg)
        ep = max(lp_norm(a - b, 2) for a, b in zip(p.states, fx.oracle))
        er = max(lp_norm(a - b, 2) for a, b in zip(r.states, fx.oracle))
        gap = max(lp_norm(a - b, 2) for a, b in zip(p.states, r.states))
        out.append(CheckResult(f"{fx.name}: picard vs oracle", ep <= fx.tol_picard, ep, fx.tol_picard))
        out.append(CheckResult(f"{fx.name}: rk4 vs oracle", er <= fx.tol_rk4, er, fx.tol_rk4))
        out.append(CheckResult(f"{fx.name}: picard vs rk4", gap <= 1e-6, gap, 1e-6))
    return out


@_timed
def homog_direct_check() -> list:
    J, f, u0, cell, tg, oracle = homog_direct_fixture()
    out = []
    for integ, tol in (("rk4", 1e-8), ("picard", 1e-6)):
        sol = homog_solve(J, f, u0, tg, PicardConfig(), cell, integ)
        err = max(float(np.max(np.abs(s.values - o))) for s, o in zip(sol.states, oracle))
        out.append(CheckResult(f"homogenized {integ} vs dense DOP853", err <= tol, err, tol))
    return out


# two-scale limits ------------------------------------------------------------

def separable_fixture(M: int = 8192, My: int = 64, eps=(0.25, 0.125, 0.0625, 0.03125)):
    """Traces ``a(x) P(x/eps)`` and ``b(x) P(x/eps)`` with Gaussian ``a, b`` and
    ``P = 1 + cos(2 pi y)/2``, their two-scale limits and the default test family."""
    g, c = MacroGrid(1, 8.0, M), CellGrid(1, My)
    P = TrigPoly.cosine(1, 0.5, offset=1.0)
    a, b = Profile("gaussian", 0.5), Profile("gaussian", 0.7, center=(0.3,))
    U = {e: sample_trace(a, P, e, g) for e in eps}
    V = {e: sample_trace(b, P, e, g) for e in eps}
    u0 = TwoScaleField.separable(g.sample(a), P, c)
    v0 = TwoScaleField.separable(g.sample(b), P, c)
    fam = default_family([Profile("bump", 1.0, center=(0.37,)), Profile("bump", 1.5, center=(-1.13,))], 1, 2)
    return U, V, u0, v0, fam


@_timed
def convolution_limit_suite(fixture=None) -> list:
    U, V, u0, v0, fam = fixture or separable_fixture()
    out = []
    for psi in fam:
        r = convolution_limit_check(U, V, u0, v0, psi, final_ratio=0.1)
        out.append(CheckResult(f"(u*v) pairing decreases, final <= 10% first [{psi.label}]",
                               r.passed, r.errors[-1], 0.1 * r.errors[0],
                               " ".join(f"{e:.2e}" for e in r.errors)))
    return out


@_timed
def translate_suite(fixture=None, t: float = 1.0) -> list:
    U, _, u0, _, fam = fixture or separable_fixture()
    out = []
    for psi in fam:
        r = translate_limit_check(U, u0, t, psi)
        ok = r.passed and r.errors[-1] <= 1e-3 * r.scale
        out.append(CheckResult(f"translate pairing, t={t} [{psi.label}]", ok, r.errors[-1], 1e-3 * r.scale,
                               " ".join(f"{e:.2e}" for e in r.errors)))
    try:
        translate_limit_check({0.3: U[0.25], 0.2: U[0.125]}, u0, t, fam[0])
        out.append(CheckResult("non-integral t/eps rejected", False))
    except ValueError:
        out.append(CheckResult("non-integral t/eps rejected", True))
    return out


# drivers ---------------------------------------------------------------------

def run_suites(cfg=None, seed: int = 0, oracle_only: bool = False) -> list:
    """All suites (``verify``), or only the FFT and integrator oracles (``oracle``)."""
    results = []
    results += convolution_suite(seed)
    results += integrator_suite()
    results += homog_direct_check()
    if oracle_only:
        return results
    results += micro_suite(seed, cfg)
    results += grid_suite(seed)
    results += model_suite(cfg)
    results += contraction_check(cfg)
    fx = separable_fixture()
    results += convolution_limit_suite(fx)
    results += translate_suite(fx)
    return results


def write_results(results, path) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["check", "passed", "value", "tol", "detail"])
    for r in results:
        w.writerow([r.name, r.passed, repr(float(r.value)), repr(float(r.tol)), r.detail])
    _atomic_write(Path(path), buf.getvalue().encode())
