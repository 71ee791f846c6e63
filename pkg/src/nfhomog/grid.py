"""Discrete fields on the truncated macroscopic torus and on the unit cell.

The macroscopic domain ``R^N`` is replaced by the box ``[-L, L)^N`` with
periodic wrap, sampled at ``x_i = -L + i h`` with ``h = 2L / M``. The unit
cell ``Y = [0, 1)^N`` is sampled at ``y_j = j / M_y``. Array axes are ordered
``(x_1, ..., x_N, y_1, ..., y_N)``, C order.
"""
from __future__ import annotations

import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .micro import LimitAtInfinity, MicroFunction, _multilinear_periodic

__all__ = [
    "MacroGrid",
    "CellGrid",
    "MacroField",
    "TwoScaleField",
    "integrate",
    "lp_norm",
    "sample_trace",
    "two_scale_eval",
    "corrector_trace",
    "refine_macro",
    "lift",
    "cell_mean",
    "write_field",
    "read_field",
    "GridMismatchError",
]

MAGIC = b"NFH1"


class GridMismatchError(ValueError):
    """Raised when two fields that must share a grid do not."""


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class MacroGrid:
    dim: int
    half_width: float
    points_per_axis: int

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError("only N = 1 and N = 2 are supported")
        if not self.half_width > 0:
            raise ValueError("half_width L must be positive")
        M = self.points_per_axis
        if M < 8 or not _is_pow2(M):
            raise ValueError(f"points_per_axis must be a power of two >= 8, got {M}")
        object.__setattr__(self, "half_width", float(self.half_width))

    @property
    def L(self) -> float:
        return self.half_width

    @property
    def M(self) -> int:
        return self.points_per_axis

    @property
    def h(self) -> float:
        return 2.0 * self.half_width / self.points_per_axis

    @property
    def shape(self) -> tuple:
        return (self.M,) * self.dim

    @property
    def cell_volume(self) -> float:
        return self.h ** self.dim

    @property
    def origin_index(self) -> tuple:
        """Index of the node at x = 0."""
        return (self.M // 2,) * self.dim

    def nodes(self) -> np.ndarray:
        return -self.L + self.h * np.arange(self.M)

    def mesh(self) -> tuple:
        x = self.nodes()
        return tuple(np.meshgrid(*([x] * self.dim), indexing="ij"))

    def points(self) -> np.ndarray:
        """Node coordinates, shape ``shape + (dim,)``."""
        return np.stack(self.mesh(), axis=-1)

    def zeros(self) -> "MacroField":
        return MacroField(self, np.zeros(self.shape))

    def sample(self, fn: Callable) -> "MacroField":
        """Sample a callable taking one coordinate array per axis."""
        vals = np.broadcast_to(np.asarray(fn(*self.mesh()), dtype=float), self.shape)
        return MacroField(self, vals)


@dataclass(frozen=True)
class CellGrid:
    dim: int
    points_per_axis: int

    def __post_init__(self):
        M = self.points_per_axis
        if M < 8 or not _is_pow2(M):
            raise ValueError(f"cell points_per_axis must be a power of two >= 8, got {M}")

    @property
    def M(self) -> int:
        return self.points_per_axis

    @property
    def shape(self) -> tuple:
        return (self.M,) * self.dim

    @property
    def cell_volume(self) -> float:
        return (1.0 / self.M) ** self.dim

    def nodes(self) -> np.ndarray:
        return np.arange(self.M) / self.M

    def points(self) -> np.ndarray:
        y = self.nodes()
        return np.stack(np.meshgrid(*([y] * self.dim), indexing="ij"), axis=-1)

    def sample(self, w: MicroFunction) -> np.ndarray:
        """Values of the cell representative of ``w`` at the nodes.

        A periodic ``w`` is sampled directly. A function with a limit at
        infinity is represented by that constant: its compact core has mean
        zero and disappears in the two-scale limit.
        """
        if isinstance(w, LimitAtInfinity):
            return np.full(self.shape, w.limit_value)
        if w.algebra.kind == "quasiPeriodic":
            raise ValueError("quasi-periodic micro functions have no representative on the unit cell")
        return np.asarray(w.evaluate(self.points()), dtype=float)


def _frozen(values) -> np.ndarray:
    v = np.array(values, dtype=float)
    v.setflags(write=False)
    return v


@dataclass(frozen=True, eq=False)
class MacroField:
    grid: MacroGrid
    values: np.ndarray

    def __post_init__(self):
        v = _frozen(self.values)
        if v.shape != self.grid.shape:
            raise ValueError(f"values of shape {v.shape} do not fit grid shape {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("MacroField values must be finite")
        object.__setattr__(self, "values", v)

    def _binary(self, other, op):
        if isinstance(other, MacroField):
            if other.grid != self.grid:
                raise GridMismatchError("fields live on different grids")
            other = other.values
        return MacroField(self.grid, op(self.values, other))

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __mul__(self, other):
        return self._binary(other, np.multiply)

    __radd__ = __add__
    __rmul__ = __mul__

    def __neg__(self):
        return MacroField(self.grid, -self.values)


@dataclass(frozen=True, eq=False)
class TwoScaleField:
    macro: MacroGrid
    cell: CellGrid
    values: np.ndarray

    def __post_init__(self):
        if self.cell.dim != self.macro.dim:
            raise ValueError("macro and cell grids must have the same dimension")
        v = _frozen(self.values)
        shape = self.macro.shape + self.cell.shape
        if v.shape != shape:
            raise ValueError(f"values of shape {v.shape} do not fit {shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("TwoScaleField values must be finite")
        object.__setattr__(self, "values", v)

    @property
    def shape(self) -> tuple:
        return self.values.shape

    @property
    def volume_element(self) -> float:
        return self.macro.cell_volume * self.cell.cell_volume

    @classmethod
    def separable(cls, a: MacroField, w, cell: CellGrid) -> "TwoScaleField":
        """``a(x) w(y)``; ``w`` is a MicroFunction or cell samples."""
        wv = cell.sample(w) if isinstance(w, MicroFunction) else np.asarray(w, dtype=float)
        N = a.grid.dim
        return cls(a.grid, cell, a.values.reshape(a.values.shape + (1,) * N) * wv)


def integrate(u: MacroField) -> float:
    """Rectangle rule ``h^N sum u``."""
    return float(u.grid.cell_volume * np.sum(u.values.ravel()))


def lp_norm(u: MacroField, p: float = 2) -> float:
    if p not in (1, 2):
        raise ValueError("lp_norm supports p in {1, 2}")
    s = np.sum(np.abs(u.values.ravel()) ** p)
    return float((u.grid.cell_volume * s) ** (1.0 / p))


def sample_trace(phi, w: MicroFunction | None, eps: float, grid: MacroGrid) -> MacroField:
    """Samples of ``phi(x) w(x / eps)`` at the grid nodes.

    ``phi`` is any callable taking one coordinate array per axis (e.g. a
    :class:`~nfhomog.profiles.Profile`), or ``None`` for the constant 1.
    """
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    mesh = grid.mesh()
    vals = np.ones(grid.shape) if phi is None else np.broadcast_to(np.asarray(phi(*mesh), dtype=float), grid.shape)
    if w is not None:
        vals = vals * w.evaluate(grid.points() / eps)
    return MacroField(grid, vals)


def two_scale_eval(u0: TwoScaleField, x_index, y) -> float:
    """Value at macro node ``x_index`` and cell point ``y`` (multilinear in y)."""
    x_index = tuple(np.atleast_1d(x_index).tolist())
    slab = u0.values[x_index]
    y = np.atleast_1d(np.asarray(y, dtype=float))
    return float(_multilinear_periodic(slab, np.mod(y, 1.0) * u0.cell.M))


def refine_macro(u0: TwoScaleField | MacroField, grid: MacroGrid):
    """Trigonometric interpolation of a field onto a finer macro grid.

    Both grids cover the same box, so the refinement factor must be a power
    of two. Used to evaluate a coarse two-scale solution at fine nodes.
    """
    src = u0.macro if isinstance(u0, TwoScaleField) else u0.grid
    if grid == src:
        return u0
    if grid.dim != src.dim or grid.L != src.L or grid.M < src.M:
        raise GridMismatchError("can only refine onto a finer grid over the same box")
    M, M2 = src.M, grid.M
    F = u0.values.astype(complex)
    for ax in range(src.dim):
        F = np.fft.fft(F, axis=ax)
        shape = list(F.shape)
        shape[ax] = M2
        G = np.zeros(shape, dtype=complex)
        lo = [slice(None)] * F.ndim
        hi = [slice(None)] * F.ndim
        lo[ax] = slice(0, M // 2)
        hi[ax] = slice(M - M // 2 + 1, M)
        G[tuple(lo)] = F[tuple(lo)]
        dst_hi = list(hi)
        dst_hi[ax] = slice(M2 - M // 2 + 1, M2)
        G[tuple(dst_hi)] = F[tuple(hi)]
        nyq = [slice(None)] * F.ndim
        nyq[ax] = M // 2
        pos = list(nyq)
        neg = list(nyq)
        neg[ax] = M2 - M // 2
        G[tuple(pos)] = 0.5 * F[tuple(nyq)]
        G[tuple(neg)] = 0.5 * F[tuple(nyq)]
        F = np.fft.ifft(G, axis=ax) * (M2 / M)
    vals = F.real
    if isinstance(u0, TwoScaleField):
        return TwoScaleField(grid, u0.cell, vals)
    return MacroField(grid, vals)


def corrector_trace(u0: TwoScaleField, eps: float, grid: MacroGrid | None = None) -> MacroField:
    """``x_i -> u0(x_i, x_i / eps mod 1)`` on ``grid`` (default: u0's macro grid).

    The cell dependence is evaluated by trigonometric interpolation, which is
    spectrally accurate for smooth periodic cell profiles.
    """
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if grid is not None:
        u0 = refine_macro(u0, grid)
    macro, cell = u0.macro, u0.cell
    N = macro.dim
    cell_axes = tuple(range(N, 2 * N))
    F = np.fft.fftn(u0.values, axes=cell_axes) / cell.M ** N
    y = np.mod(macro.points() / eps, 1.0)
    k = np.fft.fftfreq(cell.M, 1.0 / cell.M)
    # one phase table per axis, then accumulate over the cell multi-index
    phases = [np.exp(2j * np.pi * y[..., ax, None] * k) for ax in range(N)]
    out = np.zeros(macro.shape, dtype=complex)
    for idx in np.ndindex(*cell.shape):
        term = F[(Ellipsis,) + idx]
        for ax, j in enumerate(idx):
            term = term * phases[ax][..., j]
        out += term
    return MacroField(macro, out.real)


def lift(u: MacroField, cell: CellGrid) -> TwoScaleField:
    """The y-constant two-scale field ``u(x)``."""
    N = u.grid.dim
    vals = np.broadcast_to(u.values.reshape(u.values.shape + (1,) * N), u.grid.shape + cell.shape)
    return TwoScaleField(u.grid, cell, vals)


def cell_mean(u0: TwoScaleField) -> MacroField:
    N = u0.macro.dim
    return MacroField(u0.macro, u0.values.mean(axis=tuple(range(N, 2 * N))))


# binary field format -------------------------------------------------------

def _atomic_write(path: Path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_field(path, field: MacroField | TwoScaleField, meta: dict | None = None) -> Path:
    """Write ``field`` in the NFH1 binary format plus a ``.meta`` sidecar.

    Layout (little-endian): magic ``NFH1``, uint32 dim, dim x uint32 M,
    float64 L, uint32 M_y (0 for macro fields), then float64 values in C
    order with axes ``(x_1..x_N, y_1..y_N)``.
    """
    path = Path(path)
    grid = field.macro if isinstance(field, TwoScaleField) else field.grid
    my = field.cell.M if isinstance(field, TwoScaleField) else 0
    header = MAGIC + struct.pack(f"<I{grid.dim}IdI", grid.dim, *([grid.M] * grid.dim), grid.L, my)
    body = np.ascontiguousarray(field.values, dtype="<f8").tobytes()
    _atomic_write(path, header + body)
    lines = {
        "format": "NFH1",
        "kind": "two_scale" if my else "macro",
        "dim": grid.dim,
        "points_per_axis": grid.M,
        "half_width": repr(grid.L),
        "cell_points_per_axis": my,
    }
    lines.update(meta or {})
    text = "".join(f"{k} = {v}\n" for k, v in lines.items())
    _atomic_write(path.with_name(path.name + ".meta"), text.encode())
    return path


def read_field(path) -> MacroField | TwoScaleField:
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise ValueError(f"{path}: not an NFH1 field file")
    (dim,) = struct.unpack_from("<I", data, 4)
    off = 8
    Ms = struct.unpack_from(f"<{dim}I", data, off)
    off += 4 * dim
    L, my = struct.unpack_from("<dI", data, off)
    off += 12
    if len(set(Ms)) != 1:
        raise ValueError("anisotropic grids are not supported")
    grid = MacroGrid(dim, L, Ms[0])
    if my:
        cell = CellGrid(dim, my)
        vals = np.frombuffer(data, dtype="<f8", offset=off).reshape(grid.shape + cell.shape)
        return TwoScaleField(grid, cell, vals)
    vals = np.frombuffer(data, dtype="<f8", offset=off).reshape(grid.shape)
    return MacroField(grid, vals)
