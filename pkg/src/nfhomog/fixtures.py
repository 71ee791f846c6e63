"""Small solver problems with independently known solutions.

Each builder returns a :class:`SolverFixture` holding the problem data and
the oracle states at the output times. They back the oracle mode of the
experiment runner and the test-suite.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import CellGrid, MacroField, MacroGrid, integrate, lift
from .micro import TrigPoly
from .model import FiringRate, KernelSpec, Linear, Sigmoid, kernel_mass, kernel_trace, kernel_two_scale
from .oracles import integrate_direct, plane_wave_oracle, scalar_ode_oracle, two_scale_conv_matrix
from .profiles import Profile
from .solver import TimeGrid

__all__ = [
    "SolverFixture",
    "decay_fixture",
    "plane_wave_fixture",
    "scalar_ode_fixture",
    "homog_direct_fixture",
    "default_kernel_terms",
]


@dataclass
class SolverFixture:
    name: str
    J: KernelSpec
    f: FiringRate
    eps: float
    u0: MacroField
    tg: TimeGrid
    oracle: list
    tol_picard: float
    tol_rk4: float


def default_kernel_terms(dim: int = 1, micro=None):
    micro = TrigPoly.constant(1.0, dim) if micro is None else micro
    return [(Profile("gaussian", 0.5, cutoff=3.0), micro)]


def _unit_kernel(grid: MacroGrid, mass: float) -> KernelSpec:
    return KernelSpec.normalized(default_kernel_terms(grid.dim), grid, [1.0], target_mass=mass)


def decay_fixture(M: int = 256, T: float = 1.0, dt: float = 1e-3) -> SolverFixture:
    """Zero firing: ``u(t) = exp(-t) u(0)``."""
    grid = MacroGrid(1, 8.0, M)
    J = _unit_kernel(grid, 0.9)
    f = FiringRate(TrigPoly.constant(0.0), Sigmoid(2.0, 0.5))
    u0 = grid.sample(Profile("gaussian", 1.0))
    tg = TimeGrid(T, dt, stride=100)
    times = dt * np.array(tg.output_steps())
    oracle = [MacroField(grid, np.exp(-t) * u0.values) for t in times]
    return SolverFixture("decay", J, f, 1.0, u0, tg, oracle, 1e-6, 1e-8)


def plane_wave_fixture(M: int = 256, mode: int = 3, T: float = 1.0, dt: float = 1e-3) -> SolverFixture:
    """Linear test-mode firing: each Fourier mode evolves by its symbol."""
    grid = MacroGrid(1, 8.0, M)
    J = _unit_kernel(grid, 0.9)
    f = FiringRate(TrigPoly.constant(1.0), Linear())
    xi = 2 * np.pi * mode / (2 * grid.L)
    u0 = grid.sample(lambda x: np.cos(xi * x))
    tg = TimeGrid(T, dt, stride=100)
    times = dt * np.array(tg.output_steps())
    oracle = plane_wave_oracle(kernel_trace(J, 1.0, grid), mode, 1.0, times)
    return SolverFixture("plane_wave", J, f, 1.0, u0, tg, oracle, 1e-6, 1e-8)


def scalar_ode_fixture(M: int = 64, u_init: float = 0.2, mass: float = 0.8,
                       T: float = 2.0, dt: float = 1e-3) -> SolverFixture:
    """Spatially constant state: reduces to ``u' = -u + mass h(u)``."""
    grid = MacroGrid(1, 8.0, M)
    J = _unit_kernel(grid, mass)
    h = Sigmoid(2.0, 0.5)
    f = FiringRate(TrigPoly.constant(1.0), h)
    u0 = grid.sample(lambda x: np.full_like(x, u_init))
    tg = TimeGrid(T, dt, stride=100)
    times = dt * np.array(tg.output_steps())
    a = kernel_mass(J, 1.0, grid)
    traj = scalar_ode_oracle(a, h, u_init, times)
    oracle = [MacroField(grid, np.full(grid.shape, v)) for v in traj]
    return SolverFixture("scalar_ode", J, f, 1.0, u0, tg, oracle, 1e-7, 1e-9)


def homog_direct_fixture(M: int = 32, My: int = 16, T: float = 1.0, dt: float = 1e-3):
    """Two-scale problem on a small grid with a dense-matrix reference solution.

    Returns ``(J, f, u0_init, cell, tg, oracle_values)``.
    """
    grid = MacroGrid(1, 8.0, M)
    cell = CellGrid(1, My)
    P = TrigPoly.cosine(1, 0.5, offset=1.0)
    J = KernelSpec.normalized(default_kernel_terms(1, P), grid, [1.0], target_mass=0.9)
    f = FiringRate(TrigPoly.cosine(1, 0.5, offset=1.0), Sigmoid(2.0, 0.5))
    u0 = grid.sample(Profile("bump", 1.5))
    tg = TimeGrid(T, dt, stride=100)
    times = dt * np.array(tg.output_steps())
    K = two_scale_conv_matrix(kernel_two_scale(J, grid, cell))
    g = np.broadcast_to(cell.sample(f.g), grid.shape + cell.shape)
    start = lift(u0, cell).values
    oracle = integrate_direct(K, g, f.h, start, times)
    return J, f, u0, cell, tg, oracle
