"""Time integration of the eps-problem and the homogenized problem.

Two integrators share one output contract:

* :func:`picard_solve` iterates the integral operator
  ``K(phi)(t) = phi(0) + int_0^t (J * f(phi) - phi) dtau`` on consecutive
  windows of length ``rho``, with the time integral evaluated by the
  composite trapezoid rule on the step mesh. The windows are chained by
  restarting from the window's end state.
* :func:`rk4_solve` applies the classical four-stage Runge--Kutta method to
  the same right-hand side and serves as an independent reference.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .grid import CellGrid, MacroField, TwoScaleField, lift
from .model import FiringRate, HeteroProblem, HomogProblem, KernelSpec

__all__ = [
    "TimeGrid",
    "PicardConfig",
    "SolveReport",
    "Solution",
    "BoundReport",
    "ConfigurationError",
    "NonContractionError",
    "ConvergenceFailure",
    "BlowUpError",
    "default_rho",
    "picard_solve",
    "rk4_solve",
    "homog_solve",
    "apriori_monitor",
    "run_picard",
    "run_rk4",
]

logger = logging.getLogger(__name__)

# bytes of state processed per batched right-hand-side call
_BATCH_BYTES = 64 * 2**20


class ConfigurationError(ValueError):
    """Solver parameters violate a hypothesis of the construction."""


class NonContractionError(ConfigurationError):
    """Successive Picard sweeps stopped contracting."""


class ConvergenceFailure(RuntimeError):
    """The Picard sweep budget ran out before the tolerance was met."""


class BlowUpError(FloatingPointError):
    """A non-finite value appeared in the state."""


@dataclass(frozen=True)
class TimeGrid:
    """Horizon ``T``, step ``dt`` and the output stride in steps."""

    T: float
    dt: float
    stride: int = 1

    def __post_init__(self):
        if not 0 < self.dt <= self.T:
            raise ValueError("need 0 < dt <= T")
        n = round(self.T / self.dt)
        if abs(n * self.dt - self.T) > 1e-9 * self.T:
            raise ValueError(f"T / dt = {self.T / self.dt} is not an integer")
        if self.stride < 1:
            raise ValueError("output stride must be >= 1")

    @property
    def n_steps(self) -> int:
        return round(self.T / self.dt)

    def output_steps(self) -> list:
        steps = list(range(0, self.n_steps + 1, self.stride))
        if steps[-1] != self.n_steps:
            steps.append(self.n_steps)
        return steps


def default_rho(k1: float) -> float:
    return 0.9 / (2.0 * (k1 + 1.0))


@dataclass(frozen=True)
class PicardConfig:
    """Window length ``rho`` (default ``0.9 / (2 (k1 + 1))``), sweep budget, tolerance."""

    rho: float | None = None
    max_sweeps: int = 60
    tol: float = 1e-10

    def __post_init__(self):
        if self.rho is not None and not self.rho > 0:
            raise ValueError("Picard window rho must be positive")
        if not self.tol > 0:
            raise ValueError("Picard tolerance must be positive")

    def resolve(self, k1: float) -> float:
        rho = default_rho(k1) if self.rho is None else self.rho
        if not 2.0 * (k1 + 1.0) * rho < 1.0:
            raise ConfigurationError(
                f"contraction condition 2(k1+1)rho < 1 violated: "
                f"2({k1:.6g}+1)*{rho:.6g} = {2 * (k1 + 1) * rho:.6g}")
        return rho


@dataclass
class SolveReport:
    integrator: str
    dt: float
    times: np.ndarray = None
    l1: np.ndarray = None
    l2: np.ndarray = None
    sweeps: list = field(default_factory=list)
    ratios: list = field(default_factory=list)
    rho: float | None = None
    contraction_bound: float | None = None
    wall_time: float = 0.0
    eps: float | None = None

    @property
    def max_ratio(self) -> float:
        flat = [r for rs in self.ratios for r in rs]
        return max(flat) if flat else 0.0

    def records(self) -> dict:
        """Key-value summary (wall time excluded, so that dumps are reproducible)."""
        out = {
            "integrator": self.integrator,
            "dt": self.dt,
            "eps": self.eps,
            "steps": int(len(self.times) - 1) if self.times is not None else 0,
            "sup_l1_plus_l2": float(np.max(self.l1 + self.l2)) if self.l1 is not None else None,
        }
        if self.integrator == "picard":
            out.update({
                "rho": self.rho,
                "contraction_bound": self.contraction_bound,
                "windows": len(self.sweeps),
                "total_sweeps": int(sum(self.sweeps)),
                "max_observed_ratio": self.max_ratio,
            })
        return out


@dataclass
class Solution:
    """States at the output times plus the solve report."""

    times: np.ndarray
    states: list
    report: SolveReport
    eps: float | None = None

    @property
    def final(self):
        return self.states[-1]

    def values(self) -> np.ndarray:
        return np.stack([s.values for s in self.states])


def _norms(values: np.ndarray, vol: float, nbatch: int):
    flat = values.reshape(nbatch, -1)
    l1 = vol * np.sum(np.abs(flat), axis=1)
    l2 = np.sqrt(vol * np.sum(flat * flat, axis=1))
    return l1, l2


def _batched_rhs(problem, phi: np.ndarray) -> np.ndarray:
    per = max(1, _BATCH_BYTES // max(1, phi[0].nbytes))
    if phi.shape[0] <= per:
        return problem.rhs(phi)
    out = np.empty_like(phi)
    for start in range(0, phi.shape[0], per):
        out[start:start + per] = problem.rhs(phi[start:start + per])
    return out


def _guard(values: np.ndarray, where: str):
    if not np.all(np.isfinite(values)):
        raise BlowUpError(f"non-finite state encountered {where}")


def run_picard(problem, y0: np.ndarray, tg: TimeGrid, pc: PicardConfig, k1: float, vol: float):
    """Windowed Picard iteration on raw arrays.

    Returns ``(output_states, step_l1, step_l2, sweeps, ratios, rho)``.
    """
    rho = pc.resolve(k1)
    dt = tg.dt
    n_total = tg.n_steps
    per_window = max(1, int(np.floor(rho / dt + 1e-9)))
    out_steps = set(tg.output_steps())
    outputs = {0: y0.copy()} if 0 in out_steps else {}
    l1_all = np.empty(n_total + 1)
    l2_all = np.empty(n_total + 1)
    sweeps, ratios = [], []
    start = 0
    y_start = y0
    while start < n_total:
        n = min(per_window, n_total - start)
        phi = np.broadcast_to(y_start, (n + 1,) + y_start.shape).copy()
        prev = None
        window_ratios = []
        above = 0
        for sweep in range(1, pc.max_sweeps + 1):
            R = _batched_rhs(problem, phi)
            new = np.empty_like(phi)
            new[0] = y_start
            np.cumsum(0.5 * dt * (R[:-1] + R[1:]), axis=0, out=new[1:])
            new[1:] += y_start
            _guard(new, f"in Picard window starting at t={start * dt:.6g}")
            l1d, l2d = _norms(new - phi, vol, n + 1)
            diff = float(np.max(l1d + l2d))
            phi = new
            if prev is not None and prev > 0:
                ratio = diff / prev
                window_ratios.append(ratio)
                above = above + 1 if ratio >= 1.0 else 0
                if above >= 3:
                    raise NonContractionError(
                        f"Picard sweeps stopped contracting (ratios {window_ratios[-3:]}); "
                        f"check 2(k1+1)rho < 1 with k1={k1:.6g}, rho={rho:.6g}")
            prev = diff
            if diff < pc.tol:
                break
        else:
            raise ConvergenceFailure(
                f"Picard window at t={start * dt:.6g} not converged after {pc.max_sweeps} sweeps "
                f"(last difference {diff:.3e} > tol {pc.tol:.1e})")
        sweeps.append(sweep)
        ratios.append(window_ratios)
        l1w, l2w = _norms(phi, vol, n + 1)
        l1_all[start:start + n + 1] = l1w
        l2_all[start:start + n + 1] = l2w
        for k in range(1, n + 1):
            if start + k in out_steps:
                outputs[start + k] = phi[k].copy()
        y_start = phi[-1].copy()
        start += n
    if n_total == 0:
        l1_all[0], l2_all[0] = (v[0] for v in _norms(y0[None], vol, 1))
    states = [outputs[s] for s in sorted(outputs)]
    return states, l1_all, l2_all, sweeps, ratios, rho


def run_rk4(problem, y0: np.ndarray, tg: TimeGrid, vol: float):
    """Classical RK4 on raw arrays. Returns ``(output_states, step_l1, step_l2)``."""
    dt = tg.dt
    out_steps = set(tg.output_steps())
    outputs = {0: y0.copy()}
    l1_all = np.empty(tg.n_steps + 1)
    l2_all = np.empty(tg.n_steps + 1)
    y = y0.copy()
    l1_all[0], l2_all[0] = (v[0] for v in _norms(y[None], vol, 1))
    for step in range(1, tg.n_steps + 1):
        k1 = problem.rhs(y)
        k2 = problem.rhs(y + 0.5 * dt * k1)
        k3 = problem.rhs(y + 0.5 * dt * k2)
        k4 = problem.rhs(y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        _guard(y, f"in RK4 step {step}")
        l1_all[step], l2_all[step] = (v[0] for v in _norms(y[None], vol, 1))
        if step in out_steps:
            outputs[step] = y.copy()
    return [outputs[s] for s in sorted(outputs)], l1_all, l2_all


def _solve(problem, y0: np.ndarray, tg: TimeGrid, pc: PicardConfig | None, k1: float,
           vol: float, integrator: str, eps=None) -> Solution:
    t0 = time.perf_counter()
    report = SolveReport(integrator=integrator, dt=tg.dt, eps=eps)
    if integrator == "picard":
        states, l1, l2, sweeps, ratios, rho = run_picard(problem, y0, tg, pc or PicardConfig(), k1, vol)
        report.sweeps, report.ratios, report.rho = sweeps, ratios, rho
        report.contraction_bound = 2.0 * (k1 + 1.0) * rho
    elif integrator == "rk4":
        states, l1, l2 = run_rk4(problem, y0, tg, vol)
    else:
        raise ValueError(f"unknown integrator {integrator!r}")
    report.times = tg.dt * np.arange(tg.n_steps + 1)
    report.l1, report.l2 = l1, l2
    report.wall_time = time.perf_counter() - t0
    times = tg.dt * np.array(tg.output_steps(), dtype=float)
    logger.debug("%s solve done in %.2fs", integrator, report.wall_time)
    return Solution(times, [problem.wrap(s) for s in states], report, eps)


def picard_solve(J: KernelSpec, f: FiringRate, eps: float, u0_init: MacroField,
                 tg: TimeGrid, pc: PicardConfig | None = None) -> Solution:
    """Solve the eps-problem by windowed Picard iteration."""
    problem = HeteroProblem(J, f, eps, u0_init.grid)
    return _solve(problem, np.array(u0_init.values), tg, pc, f.k1,
                  u0_init.grid.cell_volume, "picard", eps)


def rk4_solve(J: KernelSpec, f: FiringRate, eps: float, u0_init: MacroField,
              tg: TimeGrid) -> Solution:
    """Solve the eps-problem with classical RK4."""
    problem = HeteroProblem(J, f, eps, u0_init.grid)
    return _solve(problem, np.array(u0_init.values), tg, None, f.k1,
                  u0_init.grid.cell_volume, "rk4", eps)


def homog_solve(J: KernelSpec, f: FiringRate, u0_init: MacroField, tg: TimeGrid,
                pc: PicardConfig | None, cell: CellGrid, integrator: str = "picard") -> Solution:
    """Solve the homogenized problem from the y-constant lift of ``u0_init``."""
    problem = HomogProblem(J, f, u0_init.grid, cell)
    start = lift(u0_init, cell)
    vol = u0_init.grid.cell_volume * cell.cell_volume
    return _solve(problem, np.array(start.values), tg, pc, f.k1, vol, integrator)


@dataclass
class BoundReport:
    """Check of the L^2 energy bound along a trajectory."""

    times: np.ndarray
    l2: np.ndarray
    bound: np.ndarray
    k1: float
    c1: float
    sup_l1_plus_l2: float
    violations: list

    @property
    def passed(self) -> bool:
        return not self.violations


def apriori_monitor(sol: Solution, f: FiringRate, c1: float | None = None) -> BoundReport:
    """Check ``||u(t)||_2 <= max(2 c1 / k1, exp(1.5 k1 t) ||u(0)||_2)`` at output times.

    ``c1`` defaults to the discrete norm of ``f(x/eps, 0)`` on the
    trajectory's grid. With ``k1 = 0`` the bound degenerates to
    ``||u(0)||_2 + c1 t``.
    """
    if not sol.states:
        raise ValueError("empty trajectory")
    first = sol.states[0]
    if not isinstance(first, MacroField):
        raise TypeError("apriori_monitor expects a trajectory of MacroFields")
    grid = first.grid
    vol = grid.cell_volume
    k1 = f.k1
    if c1 is None:
        c1 = f.c1(sol.eps if sol.eps is not None else 1.0, grid)
    l2 = np.array([np.sqrt(vol * np.sum(s.values ** 2)) for s in sol.states])
    t = np.asarray(sol.times)
    if k1 > 0:
        bound = np.maximum(2.0 * c1 / k1, np.exp(1.5 * k1 * t) * l2[0])
    else:
        bound = l2[0] + c1 * t
    bound = bound * (1.0 + 1e-6)
    bad = [(float(ti), float(li), float(bi)) for ti, li, bi in zip(t, l2, bound) if li > bi]
    rep = sol.report
    if rep.l1 is not None:
        sup = float(np.max(rep.l1 + rep.l2))
    else:
        sup = float(max(vol * np.abs(s.values).sum() for s in sol.states) + l2.max())
    return BoundReport(t, l2, bound, k1, c1, sup, bad)
