"""Connectivity kernels, firing rates and the two right-hand sides.

The heterogeneous problem on the macro torus reads

    du/dt = -u + J^eps * f(x/eps, u),    J^eps(x) = J(x, x/eps),

and the homogenized two-scale problem reads

    du0/dt = -u0 + J ** f(y, u0).

Kernels are finite sums ``sigma * sum_m J_m(x) P_m(y)`` and firing rates
are separable, ``f(y, lam) = g(y) h(lam)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import expit

from .convolve import ConvPlan
from .grid import CellGrid, MacroField, MacroGrid, TwoScaleField, integrate, lp_norm
from .micro import CellSampled, LimitAtInfinity, MicroFunction, TrigPoly
from .profiles import Profile

__all__ = [
    "KernelSpec",
    "Sigmoid",
    "Linear",
    "FiringRate",
    "kernel_trace",
    "kernel_two_scale",
    "kernel_mass",
    "apply_firing",
    "apply_firing_two_scale",
    "hetero_rhs",
    "homog_rhs",
    "HeteroProblem",
    "HomogProblem",
    "micro_min",
]


def micro_min(w: MicroFunction, resolution: int = 256) -> float:
    """Minimum of ``w`` over a dense sampling grid of its surrogate domain."""
    if isinstance(w, TrigPoly):
        n = resolution if len(w.generators) == 1 else 64
        return float(np.min(w.torus_samples(n)))
    if isinstance(w, CellSampled):
        return float(w.values.min())
    if isinstance(w, LimitAtInfinity):
        R = w.support_radius + 1.0
        y = np.linspace(-R, R, 4 * resolution + 1) - np.asarray(w.offset)[0]
        if w.dim == 1:
            return float(np.min(w.evaluate(y[:, None])))
        pts = np.stack(np.meshgrid(y, y, indexing="ij"), axis=-1)
        return float(np.min(w.evaluate(pts)))
    raise TypeError(f"unsupported micro function {type(w).__name__}")


@dataclass(frozen=True)
class KernelSpec:
    """``J(x, y) = sigma * sum_m J_m(x) P_m(y)`` with nonnegative factors.

    ``terms`` is a sequence of ``(profile, micro)`` pairs. Profiles are
    callables on coordinate arrays; :class:`~nfhomog.profiles.Profile`
    instances also carry a support radius.
    """

    terms: tuple
    sigma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple((p, w) for p, w in self.terms))
        if not self.sigma > 0:
            raise ValueError("kernel scale sigma must be positive")
        for prof, w in self.terms:
            if micro_min(w) < -1e-12:
                raise ValueError("kernel micro factors must be nonnegative")
            if isinstance(prof, Profile) and prof.amplitude < 0:
                raise ValueError("kernel macro profiles must be nonnegative")

    @property
    def dim(self) -> int:
        return self.terms[0][1].dim if self.terms else 1

    @property
    def support_radius(self) -> float:
        radii = [getattr(p, "support_radius", np.inf) for p, _ in self.terms]
        return max(radii) if radii else 0.0

    def with_sigma(self, sigma: float) -> "KernelSpec":
        return KernelSpec(self.terms, sigma)

    @classmethod
    def normalized(cls, terms, grid: MacroGrid, eps_schedule: Sequence[float],
                   target_mass: float = 1.0 - 1e-6) -> "KernelSpec":
        """Scale so that the largest kernel mass over the schedule is ``target_mass``."""
        if not 0 < target_mass <= 1:
            raise ValueError("target kernel mass must lie in (0, 1]")
        unit = cls(terms, 1.0)
        masses = [kernel_mass(unit, eps, grid) for eps in eps_schedule]
        top = max(masses)
        if not top > 0:
            raise ValueError("kernel has zero mass")
        return cls(terms, target_mass / top)

    def is_y_independent(self) -> bool:
        return all(_is_constant(w) for _, w in self.terms)


def _is_constant(w: MicroFunction) -> bool:
    if isinstance(w, TrigPoly):
        return bool(np.all(np.abs(w.coefficients[~w._zero_frequency_mask()]) == 0))
    if isinstance(w, CellSampled):
        return bool(np.all(w.values == w.values.flat[0]))
    return False


def _check_eps(eps):
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")


def kernel_trace(J: KernelSpec, eps: float, grid: MacroGrid) -> MacroField:
    """Samples of ``J(x, x/eps)``."""
    _check_eps(eps)
    mesh, pts = grid.mesh(), grid.points()
    vals = np.zeros(grid.shape)
    for prof, w in J.terms:
        vals = vals + np.asarray(prof(*mesh), dtype=float) * w.evaluate(pts / eps)
    return MacroField(grid, J.sigma * vals)


def kernel_two_scale(J: KernelSpec, macro: MacroGrid, cell: CellGrid) -> TwoScaleField:
    """``J(x, y)`` on the product grid."""
    N = macro.dim
    mesh = macro.mesh()
    vals = np.zeros(macro.shape + cell.shape)
    for prof, w in J.terms:
        a = np.asarray(prof(*mesh), dtype=float)
        vals = vals + a.reshape(a.shape + (1,) * N) * cell.sample(w)
    return TwoScaleField(macro, cell, J.sigma * vals)


def kernel_mass(J: KernelSpec, eps: float, grid: MacroGrid) -> float:
    return integrate(kernel_trace(J, eps, grid))


@dataclass(frozen=True)
class Sigmoid:
    """``h(lam) = 1 / (1 + exp(-beta (lam - theta)))``."""

    beta: float = 1.0
    theta: float = 0.0

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("sigmoid gain beta must be positive")

    @property
    def lipschitz(self) -> float:
        return self.beta / 4.0

    nonnegative = True
    test_mode = False

    def __call__(self, lam):
        return expit(self.beta * (np.asarray(lam, dtype=float) - self.theta))


@dataclass(frozen=True)
class Linear:
    """``h(lam) = lam``; analytic test mode only (not nonnegative)."""

    lipschitz = 1.0
    nonnegative = False
    test_mode = True

    def __call__(self, lam):
        return np.asarray(lam, dtype=float)


@dataclass(frozen=True)
class FiringRate:
    """``f(y, lam) = g(y) h(lam)`` with ``g >= 0``.

    ``k1 = sup(g) * Lip(h)`` is a Lipschitz constant in ``lam`` uniform in
    ``y``.
    """

    g: MicroFunction
    h: object = field(default_factory=Sigmoid)

    def __post_init__(self):
        if micro_min(self.g) < -1e-12:
            raise ValueError("firing-rate micro factor g must be nonnegative")

    @property
    def dim(self) -> int:
        return self.g.dim

    @property
    def k1(self) -> float:
        return self.g.sup_bound() * self.h.lipschitz

    @property
    def test_mode(self) -> bool:
        return bool(getattr(self.h, "test_mode", False))

    def c1(self, eps: float, grid: MacroGrid) -> float:
        """Discrete ``L^2`` norm of ``x -> f(x/eps, 0)`` on ``grid``."""
        return lp_norm(apply_firing(self, eps, grid.zeros()), 2)

    def is_y_independent(self) -> bool:
        return _is_constant(self.g)


def apply_firing(f: FiringRate, eps: float, u: MacroField) -> MacroField:
    """``x -> g(x/eps) h(u(x))``."""
    _check_eps(eps)
    g = f.g.evaluate(u.grid.points() / eps)
    return MacroField(u.grid, g * f.h(u.values))


def apply_firing_two_scale(f: FiringRate, u0: TwoScaleField) -> TwoScaleField:
    """``(x, y) -> g(y) h(u0(x, y))``."""
    return TwoScaleField(u0.macro, u0.cell, u0.cell.sample(f.g) * f.h(u0.values))


class HeteroProblem:
    """Right-hand side of the eps-problem with the kernel spectrum cached.

    :meth:`rhs` works on raw value arrays with optional leading batch axes.
    """

    def __init__(self, J: KernelSpec, f: FiringRate, eps: float, grid: MacroGrid):
        _check_eps(eps)
        self.J, self.f, self.eps, self.grid = J, f, eps, grid
        self.kernel = kernel_trace(J, eps, grid)
        self.plan = ConvPlan(self.kernel)
        self.g = f.g.evaluate(grid.points() / eps)
        self.shape = grid.shape

    def firing(self, values: np.ndarray) -> np.ndarray:
        return self.g * self.f.h(values)

    def rhs(self, values: np.ndarray) -> np.ndarray:
        return -values + self.plan.apply(self.firing(values))

    def wrap(self, values: np.ndarray) -> MacroField:
        return MacroField(self.grid, values)


class HomogProblem:
    """Right-hand side of the homogenized problem on ``macro x cell``."""

    def __init__(self, J: KernelSpec, f: FiringRate, macro: MacroGrid, cell: CellGrid):
        self.J, self.f, self.macro, self.cell = J, f, macro, cell
        self.kernel = kernel_two_scale(J, macro, cell)
        self.plan = ConvPlan(self.kernel)
        self.g = cell.sample(f.g)
        self.shape = macro.shape + cell.shape

    def firing(self, values: np.ndarray) -> np.ndarray:
        return self.g * self.f.h(values)

    def rhs(self, values: np.ndarray) -> np.ndarray:
        return -values + self.plan.apply(self.firing(values))

    def wrap(self, values: np.ndarray) -> TwoScaleField:
        return TwoScaleField(self.macro, self.cell, values)


def hetero_rhs(J: KernelSpec, f: FiringRate, eps: float, u: MacroField) -> MacroField:
    """``-u + J^eps * f^eps(., u)``."""
    prob = HeteroProblem(J, f, eps, u.grid)
    return MacroField(u.grid, prob.rhs(u.values))


def homog_rhs(J: KernelSpec, f: FiringRate, u0: TwoScaleField) -> TwoScaleField:
    """``-u0 + J ** f(., u0)``."""
    prob = HomogProblem(J, f, u0.macro, u0.cell)
    return TwoScaleField(u0.macro, u0.cell, prob.rhs(u0.values))
