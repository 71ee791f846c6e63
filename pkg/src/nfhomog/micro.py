"""Microstructure functions from concrete algebras with mean value.

Three realizations are supported:

* :class:`TrigPoly` -- finite trigonometric sums. Integer frequencies give
  periodic functions; frequencies built from non-integer generators give
  quasi-periodic (almost periodic) functions.
* :class:`CellSampled` -- a 1-periodic function known by its samples on a
  uniform grid of the unit cell, evaluated by multilinear interpolation.
* :class:`LimitAtInfinity` -- a compactly supported core added to a
  constant, i.e. a continuous function with a limit at infinity.

All objects are immutable. Translations return new objects of the same
variant.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from fractions import Fraction
from numbers import Rational
from typing import Sequence

import numpy as np

from .profiles import Profile

__all__ = [
    "AlgebraTag",
    "MicroFunction",
    "TrigPoly",
    "CellSampled",
    "LimitAtInfinity",
    "eval_micro",
    "trace",
    "mean_value",
    "besicovitch_seminorm",
    "shift_micro",
    "ball_average",
    "sup_norm",
]


def _exact(v):
    """Keep rationals exact, everything else as float."""
    if isinstance(v, (Rational, Fraction)):
        return Fraction(v)
    if isinstance(v, str):
        return Fraction(v)
    f = float(v)
    if f.is_integer():
        return Fraction(int(f))
    return f


def _as_points(y, dim: int) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if dim == 1 and (y.ndim == 0 or y.shape[-1] != 1):
        y = y[..., None]
    if y.shape[-1] != dim:
        raise ValueError(f"expected points in R^{dim}, got shape {y.shape}")
    if not np.all(np.isfinite(y)):
        raise ValueError("evaluation point must be finite")
    return y


@dataclass(frozen=True)
class AlgebraTag:
    """Which algebra a micro function lives in.

    ``spectrum_surrogate_dim`` is the dimension of the torus standing in for
    the spectrum: N for periodic functions, the number of generators for
    quasi-periodic ones, 0 for functions with a limit at infinity.
    """

    kind: str
    spectrum_surrogate_dim: int
    generators: tuple = ()

    def __post_init__(self):
        if self.kind not in ("periodic", "quasiPeriodic", "vanishingAtInfinity"):
            raise ValueError(f"unknown algebra kind {self.kind!r}")
        if self.kind == "quasiPeriodic" and not self.generators:
            raise ValueError("quasiPeriodic algebra needs at least one generator")


class MicroFunction:
    """Common interface of the three micro function variants."""

    dim: int

    def evaluate(self, y: np.ndarray) -> np.ndarray:
        """Values at points ``y`` of shape ``(..., dim)``."""
        raise NotImplementedError

    def mean(self) -> float:
        raise NotImplementedError

    def seminorm(self, p: float) -> float:
        raise NotImplementedError

    def shifted(self, a) -> "MicroFunction":
        raise NotImplementedError

    @property
    def algebra(self) -> AlgebraTag:
        raise NotImplementedError

    def sup_bound(self) -> float:
        """An upper bound for ``sup |u|``."""
        raise NotImplementedError

    def __call__(self, y):
        return self.evaluate(_as_points(y, self.dim))


@dataclass(frozen=True, eq=False)
class TrigPoly(MicroFunction):
    """``u(y) = sum_n c_n exp(2 pi i (n G) . y)``.

    Parameters
    ----------
    indices : array of int, shape (K, d)
        Integer multi-indices with respect to the generators.
    coefficients : array of complex, shape (K,)
    generators : sequence of d vectors in R^N
        Rows of G. Rational entries are kept exact, so that the zero
        frequency is detected without floating-point aliasing. ``None``
        means the standard periodic lattice (G = identity).
    real : bool
        Coefficients are conjugate-symmetric and evaluation returns the
        real part.
    """

    indices: np.ndarray
    coefficients: np.ndarray
    generators: tuple = None
    real: bool = True
    dim: int = field(init=False)

    def __post_init__(self):
        idx = np.atleast_2d(np.asarray(self.indices, dtype=np.int64))
        coef = np.atleast_1d(np.asarray(self.coefficients, dtype=complex))
        gens = self.generators
        if gens is None:
            d = idx.shape[1]
            gens = tuple(tuple(Fraction(int(i == j)) for j in range(d)) for i in range(d))
        gens = tuple(tuple(_exact(v) for v in (g if isinstance(g, (tuple, list)) else np.atleast_1d(g).tolist()))
                     for g in gens)
        if not gens:
            raise ValueError("at least one generator is required")
        dim = len(gens[0])
        if any(len(g) != dim for g in gens):
            raise ValueError("generators must all live in the same R^N")
        if idx.shape[0] != coef.shape[0] or idx.shape[1] != len(gens):
            raise ValueError("indices must have shape (len(coefficients), len(generators))")
        if not np.all(np.isfinite(coef)):
            raise ValueError("coefficients must be finite")
        # merge repeated indices; order by index for reproducibility
        merged: dict[tuple, complex] = {}
        for n, c in zip(map(tuple, idx.tolist()), coef.tolist()):
            merged[n] = merged.get(n, 0j) + c
        keys = sorted(merged)
        idx = np.array(keys, dtype=np.int64).reshape(len(keys), len(gens))
        coef = np.array([merged[k] for k in keys], dtype=complex)
        if self.real:
            lookup = dict(zip(keys, coef.tolist()))
            for n, c in lookup.items():
                partner = lookup.get(tuple(-v for v in n), 0j)
                if abs(partner - np.conj(c)) > 1e-12 * max(1.0, abs(c)):
                    raise ValueError(f"real TrigPoly needs c[-n] = conj(c[n]); fails at n={n}")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "coefficients", coef)
        object.__setattr__(self, "generators", gens)
        object.__setattr__(self, "dim", dim)

    # construction helpers -------------------------------------------------
    @classmethod
    def from_terms(cls, terms, dim: int = 1, generators=None) -> "TrigPoly":
        """Real sum of ``amplitude * cos(2 pi k . y + phase)`` terms.

        ``terms`` is a list of ``(k, amplitude, phase)``; ``k`` is an integer
        multi-index with respect to ``generators`` (the unit lattice by
        default).
        """
        if generators is None:
            generators = tuple(tuple(Fraction(int(i == j)) for j in range(dim)) for i in range(dim))
        d = len(generators)
        idx, coef = [], []
        for k, amp, phase in terms:
            k = tuple(int(v) for v in np.atleast_1d(k))
            if len(k) != d:
                raise ValueError(f"frequency index {k} does not match {d} generators")
            if all(v == 0 for v in k):
                idx.append(k)
                coef.append(amp * np.cos(phase))
            else:
                half = 0.5 * amp * np.exp(1j * phase)
                idx += [k, tuple(-v for v in k)]
                coef += [half, np.conj(half)]
        if not idx:
            idx, coef = [(0,) * d], [0.0]
        return cls(np.array(idx), np.array(coef), generators=generators, real=True)

    @classmethod
    def constant(cls, c: float, dim: int = 1) -> "TrigPoly":
        return cls.from_terms([((0,) * dim, c, 0.0)], dim=dim)

    @classmethod
    def cosine(cls, k=1, amplitude: float = 1.0, phase: float = 0.0, offset: float = 0.0,
               dim: int = 1) -> "TrigPoly":
        """``offset + amplitude * cos(2 pi k . y + phase)``."""
        k = tuple(np.atleast_1d(k).tolist())
        terms = [(k, amplitude, phase)]
        if offset:
            terms.append(((0,) * len(k), offset, 0.0))
        return cls.from_terms(terms, dim=dim)

    # properties -----------------------------------------------------------
    @property
    def frequencies(self) -> np.ndarray:
        """Frequency vectors ``n G`` as floats, shape (K, N)."""
        G = np.array([[float(v) for v in g] for g in self.generators])
        return self.indices.astype(float) @ G

    def _zero_frequency_mask(self) -> np.ndarray:
        rational = all(isinstance(v, Fraction) for g in self.generators for v in g)
        mask = []
        for n in self.indices.tolist():
            if all(v == 0 for v in n):
                mask.append(True)
            elif rational:
                f = [sum((ni * g[j] for ni, g in zip(n, self.generators)), Fraction(0))
                     for j in range(self.dim)]
                mask.append(all(v == 0 for v in f))
            else:
                mask.append(False)
        return np.array(mask, dtype=bool)

    @property
    def is_periodic(self) -> bool:
        return all(isinstance(v, Fraction) and v.denominator == 1
                   for g in self.generators for v in g)

    @property
    def algebra(self) -> AlgebraTag:
        if self.is_periodic:
            return AlgebraTag("periodic", self.dim)
        return AlgebraTag("quasiPeriodic", len(self.generators), self.generators)

    def evaluate(self, y):
        phase = 2j * np.pi * (y @ self.frequencies.T)
        vals = np.exp(phase) @ self.coefficients
        return vals.real if self.real else vals

    def torus_samples(self, n: int = 64) -> np.ndarray:
        """Values on a uniform grid of the surrogate torus T^d."""
        d = len(self.generators)
        axes = [np.arange(n) / n] * d
        theta = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        vals = np.exp(2j * np.pi * (theta @ self.indices.T.astype(float))) @ self.coefficients
        return vals.real if self.real else vals

    def mean(self) -> float:
        c = self.coefficients[self._zero_frequency_mask()].sum()
        return float(c.real) if self.real else complex(c)

    def seminorm(self, p: float) -> float:
        # |u|^p is not a trig polynomial; resample on the surrogate torus
        max_index = int(np.abs(self.indices).max(initial=0))
        n = max(64, 16 * (max_index + 1))
        if len(self.generators) > 1:
            n = min(n, 256)
        vals = np.abs(self.torus_samples(n)) ** p
        return float(vals.mean()) ** (1.0 / p)

    def shifted(self, a) -> "TrigPoly":
        a = np.broadcast_to(np.asarray(a, dtype=float), (self.dim,))
        if not np.all(np.isfinite(a)):
            raise ValueError("shift must be finite")
        coef = self.coefficients * np.exp(2j * np.pi * (self.frequencies @ a))
        return replace(self, indices=self.indices, coefficients=coef)

    def sup_bound(self) -> float:
        return float(np.abs(self.coefficients).sum())


def _multilinear_periodic(values: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Periodic multilinear interpolation; ``s`` in grid units, shape (..., N)."""
    shape = values.shape
    N = len(shape)
    base = np.floor(s)
    frac = s - base
    base = base.astype(np.int64)
    out = np.zeros(s.shape[:-1])
    for corner in itertools.product((0, 1), repeat=N):
        w = np.ones(s.shape[:-1])
        idx = []
        for ax, c in enumerate(corner):
            w = w * (frac[..., ax] if c else 1.0 - frac[..., ax])
            idx.append((base[..., ax] + c) % shape[ax])
        out = out + w * values[tuple(idx)]
    return out


@dataclass(frozen=True, eq=False)
class CellSampled(MicroFunction):
    """1-periodic function given by samples at ``y_j = j / M`` per axis.

    ``offset`` records a translation: ``u(y) = interp(values, y + offset)``.
    """

    values: np.ndarray
    offset: tuple = None
    dim: int = field(init=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim < 1 or not np.all(np.isfinite(v)):
            raise ValueError("cell samples must be a finite array")
        if len(set(v.shape)) != 1:
            raise ValueError("cell grid must have the same resolution on every axis")
        v.setflags(write=False)
        off = (0.0,) * v.ndim if self.offset is None else tuple(float(o) for o in np.atleast_1d(self.offset))
        if len(off) != v.ndim:
            raise ValueError("offset dimension mismatch")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "offset", off)
        object.__setattr__(self, "dim", v.ndim)

    @classmethod
    def from_function(cls, fn, resolution: int, dim: int = 1) -> "CellSampled":
        axes = [np.arange(resolution) / resolution] * dim
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        return cls(np.asarray(fn(pts), dtype=float))

    @property
    def resolution(self) -> int:
        return self.values.shape[0]

    @property
    def algebra(self) -> AlgebraTag:
        return AlgebraTag("periodic", self.dim)

    def evaluate(self, y):
        s = (np.mod(y + np.asarray(self.offset), 1.0)) * self.resolution
        return _multilinear_periodic(self.values, s)

    def mean(self) -> float:
        return float(self.values.mean())

    def seminorm(self, p: float) -> float:
        return float((np.abs(self.values) ** p).mean()) ** (1.0 / p)

    def shifted(self, a) -> "CellSampled":
        a = np.broadcast_to(np.asarray(a, dtype=float), (self.dim,))
        if not np.all(np.isfinite(a)):
            raise ValueError("shift must be finite")
        off = np.mod(np.asarray(self.offset) + a, 1.0)
        return CellSampled(self.values, tuple(off.tolist()))

    def sup_bound(self) -> float:
        return float(np.abs(self.values).max())


@dataclass(frozen=True, eq=False)
class LimitAtInfinity(MicroFunction):
    """``u(y) = limit_value + core(y + offset)`` with a compactly supported core.

    The core is either a :class:`~nfhomog.profiles.Profile` with finite
    support, or samples on the box ``[-R, R]^N`` (``core_box = R``)
    interpolated multilinearly and set to zero outside the box.
    """

    core: object
    limit_value: float = 0.0
    dim: int = 1
    core_box: float | None = None
    offset: tuple = None

    def __post_init__(self):
        if isinstance(self.core, Profile):
            if not np.isfinite(self.core.support_radius):
                raise ValueError("core profile must have compact support")
        else:
            v = np.array(self.core, dtype=float)
            if self.core_box is None or not self.core_box > 0:
                raise ValueError("sampled core needs a positive core_box half-width")
            if v.ndim != self.dim or not np.all(np.isfinite(v)):
                raise ValueError("sampled core must be a finite array of the right dimension")
            v.setflags(write=False)
            object.__setattr__(self, "core", v)
        off = (0.0,) * self.dim if self.offset is None else tuple(float(o) for o in np.atleast_1d(self.offset))
        object.__setattr__(self, "offset", off)
        object.__setattr__(self, "limit_value", float(self.limit_value))

    @property
    def algebra(self) -> AlgebraTag:
        return AlgebraTag("vanishingAtInfinity", 0)

    @property
    def support_radius(self) -> float:
        if isinstance(self.core, Profile):
            return self.core.support_radius
        return float(self.core_box) * np.sqrt(self.dim)

    def _core_values(self, y):
        z = y + np.asarray(self.offset)
        if isinstance(self.core, Profile):
            return self.core(*np.moveaxis(z, -1, 0))
        R = self.core_box
        n = self.core.shape[0]
        # node k sits at -R + 2R k / (n - 1)
        s = (z + R) * (n - 1) / (2 * R)
        inside = np.all((s >= 0) & (s <= n - 1), axis=-1)
        s = np.clip(s, 0, n - 1 - 1e-12)
        padded = np.pad(self.core, [(0, 1)] * self.dim)
        vals = _multilinear_periodic(padded, s)
        return np.where(inside, vals, 0.0)

    def evaluate(self, y):
        return self.limit_value + self._core_values(y)

    def mean(self) -> float:
        return self.limit_value

    def seminorm(self, p: float) -> float:
        return abs(self.limit_value)

    def shifted(self, a) -> "LimitAtInfinity":
        a = np.broadcast_to(np.asarray(a, dtype=float), (self.dim,))
        if not np.all(np.isfinite(a)):
            raise ValueError("shift must be finite")
        return replace(self, offset=tuple((np.asarray(self.offset) + a).tolist()))

    def sup_bound(self) -> float:
        if isinstance(self.core, Profile):
            core_max = abs(self.core.amplitude)
        else:
            core_max = float(np.abs(self.core).max())
        return abs(self.limit_value) + core_max


# functional interface ------------------------------------------------------

def eval_micro(u: MicroFunction, y) -> np.ndarray | float:
    """Evaluate ``u`` at a point (or array of points with trailing axis N)."""
    out = u(y)
    return float(out) if np.ndim(out) == 0 else out


def trace(u: MicroFunction, eps: float, x) -> np.ndarray | float:
    """``u(x / eps)``."""
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    return eval_micro(u, np.asarray(x, dtype=float) / eps)


def mean_value(u: MicroFunction) -> float:
    return u.mean()


def besicovitch_seminorm(u: MicroFunction, p: float) -> float:
    """``M(|u|^p)^(1/p)``."""
    if not p >= 1:
        raise ValueError(f"Besicovitch seminorm needs p >= 1, got {p}")
    return u.seminorm(p)


def shift_micro(u: MicroFunction, a) -> MicroFunction:
    """``y -> u(y + a)``."""
    return u.shifted(a)


def sup_norm(u: MicroFunction) -> float:
    return u.sup_bound()


def ball_average(u: MicroFunction, R: float, spacing: float | None = None,
                 chunk: int = 1 << 20) -> float:
    """Average of ``u`` over the ball ``B_R`` by the rectangle rule.

    Nodes are ``k * spacing`` with integer ``k`` inside the closed ball. This
    is an independent oracle for the mean value at finite ``R``.
    """
    N = u.dim
    if spacing is None:
        spacing = 0.01 if N == 1 else 0.05
    n = int(np.floor(R / spacing))
    ks = np.arange(-n, n + 1) * spacing
    if N == 1:
        return float(np.mean(u.evaluate(ks[:, None])))
    total, count = 0.0, 0
    rows = max(1, chunk // ks.size)
    for start in range(0, ks.size, rows):
        x0 = ks[start:start + rows]
        pts = np.stack(np.meshgrid(x0, ks, indexing="ij"), axis=-1)
        inside = (pts ** 2).sum(-1) <= R * R
        if N > 2:
            raise NotImplementedError("ball averages implemented for N <= 2")
        vals = u.evaluate(pts[inside])
        total += float(vals.sum())
        count += int(inside.sum())
    return total / count
