"""Convolution on the macroscopic torus and on the product torus Q x Y.

Macroscopic convolution is positional: the node at index ``M // 2`` is the
origin, so that ``(u * v)(x_i) = h^N sum_j u(x_j) v(x_i - x_j)`` with
``x_i - x_j`` reduced modulo the box. On the cell the origin is index 0.

The fast routines use real FFTs with numpy's default normalization (forward
unnormalized, inverse scaled by ``1 / size``). The ``*_direct`` routines are
independent quadrature oracles of quadratic cost.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import GridMismatchError, MacroField, TwoScaleField

__all__ = [
    "ConvPlan",
    "conv_macro",
    "conv_direct",
    "double_conv",
    "double_conv_direct",
    "cell_conv",
    "two_scale_norm",
    "YoungReport",
    "young_check",
    "DIRECT_SIZE_CAP",
]

DIRECT_SIZE_CAP = 4096


class ConvPlan:
    """Reusable convolution with a fixed kernel.

    The kernel spectrum is computed once. :meth:`apply` accepts value arrays
    with any number of leading batch axes, which lets the Picard solver
    convolve a whole time window in one call.

    Parameters
    ----------
    kernel : MacroField or TwoScaleField
    """

    def __init__(self, kernel: MacroField | TwoScaleField):
        if isinstance(kernel, TwoScaleField):
            self.macro, self.cell = kernel.macro, kernel.cell
            self.shape = kernel.macro.shape + kernel.cell.shape
            self.scale = kernel.volume_element
        else:
            self.macro, self.cell = kernel.grid, None
            self.shape = kernel.grid.shape
            self.scale = kernel.grid.cell_volume
        N = self.macro.dim
        self.axes = tuple(range(-len(self.shape), 0))
        self.macro_axes = self.axes[:N]
        self.shift = (self.macro.M // 2,) * N
        self._khat = np.fft.rfftn(kernel.values, axes=self.axes)

    def matches(self, field) -> bool:
        if isinstance(field, TwoScaleField):
            return self.cell is not None and field.macro == self.macro and field.cell == self.cell
        return self.cell is None and field.grid == self.macro

    def apply(self, values: np.ndarray) -> np.ndarray:
        if values.shape[-len(self.shape):] != self.shape:
            raise GridMismatchError(f"plan expects trailing shape {self.shape}, got {values.shape}")
        uhat = np.fft.rfftn(values, axes=self.axes)
        out = np.fft.irfftn(uhat * self._khat, s=self.shape, axes=self.axes)
        out = np.roll(out, self.shift, axis=self.macro_axes)
        return self.scale * out

    def __call__(self, field):
        if not self.matches(field):
            raise GridMismatchError("field does not match the convolution plan")
        if isinstance(field, TwoScaleField):
            return TwoScaleField(field.macro, field.cell, self.apply(field.values))
        return MacroField(field.grid, self.apply(field.values))


def conv_macro(u: MacroField, v: MacroField) -> MacroField:
    """Circular convolution ``u * v`` on the macro torus via FFT."""
    if u.grid != v.grid:
        raise GridMismatchError("conv_macro needs both fields on the same grid")
    return ConvPlan(v)(u)


def conv_direct(u: MacroField, v: MacroField) -> MacroField:
    """``h^N sum_j u_j v_{i - j}`` evaluated term by term (oracle)."""
    if u.grid != v.grid:
        raise GridMismatchError("conv_direct needs both fields on the same grid")
    grid = u.grid
    if u.values.size > DIRECT_SIZE_CAP:
        raise ValueError(f"conv_direct is an oracle limited to M^N <= {DIRECT_SIZE_CAP}")
    half = grid.M // 2
    out = np.zeros(grid.shape)
    for j in np.ndindex(*grid.shape):
        out += u.values[j] * np.roll(v.values, tuple(jj - half for jj in j), axis=tuple(range(grid.dim)))
    return MacroField(grid, grid.cell_volume * out)


def _check_two_scale(u0: TwoScaleField, v0: TwoScaleField):
    if u0.macro != v0.macro or u0.cell != v0.cell:
        raise GridMismatchError("two-scale fields live on different grids")


def double_conv(u0: TwoScaleField, v0: TwoScaleField) -> TwoScaleField:
    """``u0 ** v0``: joint convolution in x over Q and in y over the unit cell."""
    _check_two_scale(u0, v0)
    return ConvPlan(v0)(u0)


def double_conv_direct(u0: TwoScaleField, v0: TwoScaleField) -> TwoScaleField:
    """Term-by-term double convolution (oracle)."""
    _check_two_scale(u0, v0)
    if u0.values.size > DIRECT_SIZE_CAP:
        raise ValueError(f"double_conv_direct is an oracle limited to {DIRECT_SIZE_CAP} nodes")
    N = u0.macro.dim
    half = u0.macro.M // 2
    out = np.zeros(u0.shape)
    for j in np.ndindex(*u0.shape):
        shift = tuple(jj - half for jj in j[:N]) + tuple(j[N:])
        out += u0.values[j] * np.roll(v0.values, shift, axis=tuple(range(2 * N)))
    return TwoScaleField(u0.macro, u0.cell, u0.volume_element * out)


def cell_conv(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Circular convolution of two cell-sampled functions, ``int_Y p(y - r) q(r) dr``."""
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise GridMismatchError("cell arrays differ in shape")
    out = np.zeros(p.shape)
    for j in np.ndindex(*p.shape):
        out += p[j] * np.roll(q, j, axis=tuple(range(p.ndim)))
    return out / p.size


def two_scale_norm(u0: TwoScaleField, p: float) -> float:
    """``L^p(Q x Y)`` norm by the product rectangle rule."""
    s = np.sum(np.abs(u0.values.ravel()) ** p)
    return float((u0.volume_element * s) ** (1.0 / p))


@dataclass(frozen=True)
class YoungReport:
    p: float
    lhs: float
    rhs: float
    passed: bool


def young_check(u0: TwoScaleField, v0: TwoScaleField, p: float) -> YoungReport:
    """Compare ``||u0 ** v0||_p`` with ``||u0||_p ||v0||_1``."""
    if p not in (1, 2):
        raise ValueError("young_check supports p in {1, 2}")
    lhs = two_scale_norm(double_conv(u0, v0), p)
    rhs = two_scale_norm(u0, p) * two_scale_norm(v0, 1)
    return YoungReport(p, lhs, rhs, lhs <= rhs * (1 + 1e-10) + 1e-300)
