"""Independent reference computations used to validate the fast paths.

Nothing here calls the FFT convolution or the fixed-step integrators: the
convolution operators are assembled entry by entry as dense matrices and
time integration is delegated to an adaptive high-order scipy integrator.
"""
from __future__ import annotations

import numpy as np
from scipy.integrate import solve_ivp

from .grid import MacroField, TwoScaleField
from .model import FiringRate, KernelSpec, kernel_trace, kernel_two_scale

__all__ = [
    "macro_conv_matrix",
    "two_scale_conv_matrix",
    "hetero_rhs_direct",
    "homog_rhs_direct",
    "integrate_direct",
    "scalar_ode_oracle",
    "discrete_symbol",
    "plane_wave_oracle",
]

_MATRIX_CAP = 4096


def macro_conv_matrix(kernel: MacroField) -> np.ndarray:
    """Dense matrix ``K`` with ``(K u)_i = h^N sum_j kernel(x_i - x_j) u_j``."""
    grid = kernel.grid
    n = kernel.values.size
    if n > _MATRIX_CAP:
        raise ValueError("dense oracle limited to 4096 nodes")
    idx = np.array(list(np.ndindex(*grid.shape)))
    half = grid.M // 2
    diff = (idx[:, None, :] - idx[None, :, :] + half) % grid.M
    return grid.cell_volume * kernel.values[tuple(np.moveaxis(diff, -1, 0))]


def two_scale_conv_matrix(kernel: TwoScaleField) -> np.ndarray:
    """Dense matrix of the double convolution with ``kernel``."""
    N = kernel.macro.dim
    n = kernel.values.size
    if n > _MATRIX_CAP:
        raise ValueError("dense oracle limited to 4096 nodes")
    idx = np.array(list(np.ndindex(*kernel.shape)))
    sizes = np.array(kernel.shape)
    offset = np.array([kernel.macro.M // 2] * N + [0] * N)
    diff = (idx[:, None, :] - idx[None, :, :] + offset) % sizes
    return kernel.volume_element * kernel.values[tuple(np.moveaxis(diff, -1, 0))]


def hetero_rhs_direct(J: KernelSpec, f: FiringRate, eps: float, u: MacroField) -> MacroField:
    K = macro_conv_matrix(kernel_trace(J, eps, u.grid))
    g = f.g.evaluate(u.grid.points() / eps).ravel()
    vals = -u.values.ravel() + K @ (g * f.h(u.values.ravel()))
    return MacroField(u.grid, vals.reshape(u.grid.shape))


def homog_rhs_direct(J: KernelSpec, f: FiringRate, u0: TwoScaleField) -> TwoScaleField:
    K = two_scale_conv_matrix(kernel_two_scale(J, u0.macro, u0.cell))
    N = u0.macro.dim
    g = np.broadcast_to(u0.cell.sample(f.g), u0.shape).ravel()
    vals = -u0.values.ravel() + K @ (g * f.h(u0.values.ravel()))
    return TwoScaleField(u0.macro, u0.cell, vals.reshape(u0.shape))


def integrate_direct(K: np.ndarray, g: np.ndarray, h, y0: np.ndarray, times,
                     rtol: float = 1e-12, atol: float = 1e-14) -> np.ndarray:
    """Integrate ``y' = -y + K (g h(y))`` with DOP853; returns states at ``times``."""
    shape = y0.shape
    g = np.asarray(g).ravel()

    def rhs(_t, y):
        return -y + K @ (g * h(y))

    times = np.asarray(times, dtype=float)
    sol = solve_ivp(rhs, (times[0], times[-1]), y0.ravel(), method="DOP853",
                    t_eval=times, rtol=rtol, atol=atol)
    if not sol.success:
        raise RuntimeError(sol.message)
    return sol.y.T.reshape((len(times),) + shape)


def scalar_ode_oracle(mass: float, h, u_init: float, times, gain: float = 1.0) -> np.ndarray:
    """``u' = -u + mass * gain * h(u)`` solved adaptively to near machine precision."""
    times = np.asarray(times, dtype=float)
    sol = solve_ivp(lambda t, u: -u + mass * gain * h(u), (times[0], times[-1]), [u_init],
                    method="DOP853", t_eval=times, rtol=1e-13, atol=1e-15)
    if not sol.success:
        raise RuntimeError(sol.message)
    return sol.y[0]


def discrete_symbol(kernel: MacroField, k) -> complex:
    """``h^N sum_m J(z_m) exp(-i xi . z_m)`` with ``xi = 2 pi k / (2L)``, summed directly."""
    grid = kernel.grid
    xi = 2 * np.pi * np.atleast_1d(np.asarray(k, dtype=float)) / (2 * grid.L)
    phase = np.tensordot(grid.points(), xi, axes=([-1], [0]))
    return complex(grid.cell_volume * np.sum(kernel.values * np.exp(-1j * phase)))


def plane_wave_oracle(kernel: MacroField, k, amplitude: float, times) -> list:
    """Exact evolution of ``amplitude cos(xi . x)`` under ``u' = -u + J * u``.

    The mode is multiplied by ``exp((J_hat(xi) - 1) t)``; the conjugate mode
    uses the conjugate symbol.
    """
    grid = kernel.grid
    xi = 2 * np.pi * np.atleast_1d(np.asarray(k, dtype=float)) / (2 * grid.L)
    phase = np.tensordot(grid.points(), xi, axes=([-1], [0]))
    s = discrete_symbol(kernel, k)
    out = []
    for t in np.asarray(times, dtype=float):
        z = np.exp((s - 1.0) * t) * np.exp(1j * phase)
        out.append(MacroField(grid, amplitude * z.real))
    return out
