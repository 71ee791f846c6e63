"""Numerical diagnostics of two-scale (Sigma-) convergence.

A sequence ``u_eps`` converges weakly to a two-scale field ``u0(x, y)`` when

    int_Q u_eps(x) psi(x, x/eps) dx  ->  int_Q int_Y u0(x, y) psi(x, y) dy dx

for admissible test functions ``psi``. The quantifier over all ``psi`` is
replaced here by a finite family of tensor products ``phi_i(x) w_j(y)``;
every report is therefore a statement about the configured family only.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .convolve import conv_macro, double_conv, two_scale_norm
from .grid import MacroField, MacroGrid, TwoScaleField, lp_norm, sample_trace
from .micro import MicroFunction, TrigPoly
from .profiles import Profile

__all__ = [
    "TimeFactor",
    "TestFunction",
    "PairingReport",
    "StrongReport",
    "check_commensurate",
    "is_commensurate",
    "weak_sigma_pairing",
    "limit_pairing",
    "strong_sigma_check",
    "translate_limit_check",
    "convolution_limit_check",
    "spacetime_pairing",
    "spacetime_limit_pairing",
    "holder_bound",
    "default_family",
    "strictly_decreasing",
    "fit_rate",
]


@dataclass(frozen=True)
class TimeFactor:
    """``chi(t)``: a polynomial (``coeffs``, lowest order first) or
    ``cos(omega t + phase)``."""

    kind: str = "poly"
    coeffs: tuple = (1.0,)
    omega: float = 0.0
    phase: float = 0.0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "poly":
            return np.polynomial.polynomial.polyval(t, self.coeffs)
        if self.kind == "cosine":
            return np.cos(self.omega * t + self.phase)
        raise ValueError(f"unknown time factor kind {self.kind!r}")


@dataclass(frozen=True)
class TestFunction:
    """``psi(x, y, t) = phi(x) w(y) chi(t)``."""

    __test__ = False  # keep pytest from collecting this class

    phi: Callable
    w: MicroFunction
    chi: TimeFactor | None = None
    label: str = ""

    def __post_init__(self):
        if not np.isfinite(self.w.sup_bound()):
            raise ValueError("micro factor of a test function must be bounded")

    def time_factor(self, t):
        return np.ones_like(np.asarray(t, dtype=float)) if self.chi is None else self.chi(t)


def is_commensurate(eps: float, grid: MacroGrid, rtol: float = 1e-9) -> bool:
    """True when ``2L / eps`` is a positive integer (the trace is torus-periodic)."""
    if not eps > 0:
        return False
    n = 2.0 * grid.L / eps
    return abs(n - round(n)) <= rtol * max(1.0, n) and round(n) >= 1


def check_commensurate(eps: float, grid: MacroGrid):
    if not is_commensurate(eps, grid):
        raise ValueError(f"eps={eps!r} is not grid-commensurate: 2L/eps = {2 * grid.L / eps!r} "
                         f"is not an integer (L={grid.L})")


def weak_sigma_pairing(u: MacroField, psi: TestFunction, eps: float) -> float:
    """``int_Q u(x) phi(x) w(x/eps) dx`` by the rectangle rule."""
    check_commensurate(eps, u.grid)
    trace = sample_trace(psi.phi, psi.w, eps, u.grid)
    return float(u.grid.cell_volume * np.sum((u.values * trace.values).ravel()))


def _cell_factor(w: MicroFunction, u0: TwoScaleField) -> np.ndarray:
    if w.algebra.kind == "quasiPeriodic":
        raise ValueError("limit pairings are implemented for periodic micro factors only")
    return u0.cell.sample(w)


def limit_pairing(u0: TwoScaleField, psi: TestFunction) -> float:
    """``int_Q int_Y u0(x, y) phi(x) w(y) dy dx`` by the product rectangle rule."""
    N = u0.macro.dim
    phi = np.asarray(psi.phi(*u0.macro.mesh()), dtype=float)
    weight = phi.reshape(phi.shape + (1,) * N) * _cell_factor(psi.w, u0)
    return float(u0.volume_element * np.sum((u0.values * weight).ravel()))


def fit_rate(eps, errors, drop_first: bool = True) -> float:
    """Least-squares slope of ``log(error)`` against ``log(eps)``."""
    e = np.asarray(eps, dtype=float)
    r = np.asarray(errors, dtype=float)
    if drop_first:
        e, r = e[1:], r[1:]
    ok = r > 0
    if ok.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(e[ok]), np.log(r[ok]), 1)[0])


def strictly_decreasing(errors, skip_first: bool = False, floor: float = 0.0) -> bool:
    """Each error is below its predecessor, or already at/below ``floor``."""
    r = list(errors)[1:] if skip_first else list(errors)
    return all(b < a or b <= floor for a, b in zip(r[:-1], r[1:]))


@dataclass
class PairingReport:
    eps: list
    pairings: list
    limit: object
    errors: list
    rate: float
    passed: bool
    label: str = ""
    scale: float = 1.0

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["eps", "pairing", "limit", "abs_error"])
        limits = self.limit if isinstance(self.limit, (list, tuple)) else [self.limit] * len(self.eps)
        for e, p, l, r in zip(self.eps, self.pairings, limits, self.errors):
            w.writerow([repr(float(e)), repr(float(p)), repr(float(l)), repr(float(r))])
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "label": self.label,
            "passed": bool(self.passed),
            "rate": None if np.isnan(self.rate) else float(self.rate),
            "first_error": float(self.errors[0]),
            "final_error": float(self.errors[-1]),
            "scale": float(self.scale),
            "note": "verified on the configured test family only",
        }


def _check_schedule(eps):
    eps = [float(e) for e in eps]
    if any(b >= a for a, b in zip(eps[:-1], eps[1:])):
        raise ValueError("eps schedule must be strictly decreasing")
    return eps


def _report(eps, pairings, limit, label, skip_first=False, rel_floor=1e-12, final_ratio=None, scale=0.0):
    # ``scale`` is the integrand magnitude when known: a pairing that cancels to
    # zero still carries roundoff proportional to it
    limits = np.broadcast_to(np.asarray(limit, dtype=float), (len(eps),))
    errors = [abs(p - l) for p, l in zip(pairings, limits)]
    scale = max([abs(float(x)) for x in limits] + [abs(p) for p in pairings] + [float(scale), 1e-300])
    floor = rel_floor * scale
    ok = strictly_decreasing(errors, skip_first=skip_first, floor=floor)
    if final_ratio is not None:
        ok = ok and errors[-1] <= final_ratio * errors[0] + floor
    lim = float(limits[0]) if np.all(limits == limits[0]) else [float(x) for x in limits]
    return PairingReport(list(eps), [float(p) for p in pairings], lim, errors,
                         fit_rate(eps, errors), bool(ok), label, scale)


def _as_sequence(seq):
    if isinstance(seq, dict):
        items = list(seq.items())
    else:
        items = list(seq)
    eps = _check_schedule([e for e, _ in items])
    return eps, [u for _, u in items]


@dataclass
class StrongReport:
    weak: list
    norm_gaps: list
    eps: list
    limit_norm: float
    weak_passed: bool
    norm_passed: bool

    @property
    def passed(self) -> bool:
        return self.weak_passed and self.norm_passed


def strong_sigma_check(seq, u0: TwoScaleField, p: float, family: Sequence[TestFunction],
                       tol: float = 1e-6, rel_floor: float = 1e-12) -> StrongReport:
    """Weak pairings over ``family`` plus the norm gap ``| ||u_eps||_p - ||u0||_p |``."""
    eps, fields = _as_sequence(seq)
    weak = []
    for k, psi in enumerate(family):
        pairs = [weak_sigma_pairing(u, psi, e) for e, u in zip(eps, fields)]
        weak.append(_report(eps, pairs, limit_pairing(u0, psi), psi.label or f"psi{k}",
                            rel_floor=rel_floor))
    target = two_scale_norm(u0, p)
    gaps = [abs(_lp(u, p) - target) for u in fields]
    floor = rel_floor * max(target, 1e-300)
    weak_ok = all(r.passed or max(r.errors) <= r.scale * 1e-10 for r in weak)
    norm_ok = (strictly_decreasing(gaps, floor=floor) and gaps[-1] < tol) or max(gaps) <= floor
    return StrongReport(weak, gaps, eps, target, weak_ok, norm_ok)


def _lp(u: MacroField, p: float) -> float:
    if p in (1, 2):
        return lp_norm(u, p)
    return float((u.grid.cell_volume * np.sum(np.abs(u.values) ** p)) ** (1.0 / p))


def _shift_steps(t, grid: MacroGrid) -> tuple:
    t = np.broadcast_to(np.asarray(t, dtype=float), (grid.dim,))
    s = t / grid.h
    if np.any(np.abs(s - np.round(s)) > 1e-9):
        raise ValueError(f"shift {t} is not a multiple of the grid step {grid.h}")
    return tuple(int(v) for v in np.round(s))


def translate_limit_check(seq, u0: TwoScaleField, t, psi: TestFunction,
                          rel_floor: float = 1e-12) -> PairingReport:
    """Pair ``v_eps(x) = u_eps(x + t)`` against ``psi`` and compare with the
    pairing of ``u0(x + t, y)``.

    The schedule must make every ``t / eps`` an integer vector, which pins the
    limit phase of ``t / eps`` on the cell to zero.
    """
    eps, fields = _as_sequence(seq)
    t_vec = np.atleast_1d(np.asarray(t, dtype=float))
    for e in eps:
        q = t_vec / e
        if np.any(np.abs(q - np.round(q)) > 1e-9):
            raise ValueError(f"t/eps = {q} is not integral for eps={e}; the limit phase is not pinned")
    pairs = []
    for e, u in zip(eps, fields):
        s = _shift_steps(t_vec, u.grid)
        v = MacroField(u.grid, np.roll(u.values, tuple(-k for k in s), axis=tuple(range(u.grid.dim))))
        pairs.append(weak_sigma_pairing(v, psi, e))
    s0 = _shift_steps(t_vec, u0.macro)
    v0 = TwoScaleField(u0.macro, u0.cell,
                       np.roll(u0.values, tuple(-k for k in s0), axis=tuple(range(u0.macro.dim))))
    return _report(eps, pairs, limit_pairing(v0, psi), psi.label or "translate", rel_floor=rel_floor)


def convolution_limit_check(seqU, seqV, u0: TwoScaleField, v0: TwoScaleField,
                            psi: TestFunction, rel_floor: float = 1e-12,
                            final_ratio: float | None = None) -> PairingReport:
    """Pair ``u_eps * v_eps`` against ``psi`` and compare with ``u0 ** v0``."""
    eps, us = _as_sequence(seqU)
    eps_v, vs = _as_sequence(seqV)
    if eps != eps_v:
        raise ValueError("the two sequences must share one eps schedule")
    pairs = [weak_sigma_pairing(conv_macro(u, v), psi, e) for e, u, v in zip(eps, us, vs)]
    limit = limit_pairing(double_conv(u0, v0), psi)
    return _report(eps, pairs, limit, psi.label or "convolution", rel_floor=rel_floor,
                   final_ratio=final_ratio)


def _time_weights(times) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    if t.size < 2:
        return np.zeros_like(t)
    dt = np.diff(t)
    if np.any(np.abs(dt - dt[0]) > 1e-9 * max(1.0, abs(dt[0]))):
        raise ValueError("space-time pairings need equi-spaced times")
    w = np.full(t.size, dt[0])
    w[0] = w[-1] = 0.5 * dt[0]
    return w


def spacetime_pairing(times, states, psi: TestFunction, eps: float, magnitude: bool = False) -> float:
    """Trapezoid in time of ``chi(t) int u(x, t) psi(x, x/eps) dx``.

    With ``magnitude`` the integrand is replaced by its absolute value, which
    sets the roundoff scale of the pairing.
    """
    w = _time_weights(times) * psi.time_factor(times)
    check_commensurate(eps, states[0].grid)
    trace = sample_trace(psi.phi, psi.w, eps, states[0].grid).values
    vol = states[0].grid.cell_volume
    f = np.abs if magnitude else (lambda a: a)
    vals = [vol * np.sum(f(s.values * trace).ravel()) for s in states]
    w = np.abs(w) if magnitude else w
    return float(np.dot(w, vals))


def spacetime_limit_pairing(times, states, psi: TestFunction) -> float:
    """Trapezoid in time of ``chi(t) int int u0(x, t, y) psi(x, y) dy dx``."""
    w = _time_weights(times) * psi.time_factor(times)
    return float(np.dot(w, [limit_pairing(s, psi) for s in states]))


def holder_bound(u: MacroField, psi: TestFunction, eps: float) -> tuple:
    """``(|pairing|, ||u||_2 ||psi^eps||_2)``; the first never exceeds the second."""
    trace = sample_trace(psi.phi, psi.w, eps, u.grid)
    return abs(weak_sigma_pairing(u, psi, eps)), lp_norm(u, 2) * lp_norm(trace, 2)


def default_family(profiles: Sequence, dim: int = 1, kmax: int = 2) -> list:
    """Tensor products of ``profiles`` with ``1, cos(2 pi k.y), sin(2 pi k.y)``, ``|k|_inf <= kmax``."""
    micros = [("1", TrigPoly.constant(1.0, dim))]
    ks = []
    for k in np.ndindex(*([2 * kmax + 1] * dim)):
        k = tuple(v - kmax for v in k)
        nonzero = [v for v in k if v]
        if nonzero and nonzero[0] > 0:
            ks.append(k)
    for k in ks:
        name = ",".join(str(v) for v in k)
        micros.append((f"cos[{name}]", TrigPoly.from_terms([(k, 1.0, 0.0)], dim=dim)))
        micros.append((f"sin[{name}]", TrigPoly.from_terms([(k, 1.0, -np.pi / 2)], dim=dim)))
    family = []
    for i, phi in enumerate(profiles):
        for name, w in micros:
            family.append(TestFunction(phi, w, label=f"phi{i}*{name}"))
    return family
