"""Closed-form radial profiles on R^N used for macroscopic data.

A profile is evaluated on coordinate arrays, one array per axis, as
produced by :meth:`nfhomog.grid.MacroGrid.mesh`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

KINDS = ("gaussian", "indicator", "bump", "cosine_taper", "constant")


@dataclass(frozen=True)
class Profile:
    """Radial profile ``amplitude * shape(|x - center|)``.

    Parameters
    ----------
    kind : str
        One of ``gaussian``, ``indicator``, ``bump``, ``cosine_taper``,
        ``constant``.
    width : float
        Standard deviation for ``gaussian``; support radius for the
        compactly supported kinds. Ignored by ``constant``.
    amplitude : float
        Peak value.
    center : tuple of float
        Center point; its length fixes the dimension (empty means "any
        dimension, centered at the origin").
    cutoff : float, optional
        Gaussian values at ``|x - center| >= cutoff`` are set to zero.
    taper : float
        Width of the raised-cosine shoulder for ``cosine_taper``.
    """

    kind: str
    width: float = 1.0
    amplitude: float = 1.0
    center: tuple = field(default=())
    cutoff: float | None = None
    taper: float = 0.5

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown profile kind {self.kind!r}; expected one of {KINDS}")
        if self.kind != "constant" and not self.width > 0:
            raise ValueError("profile width must be positive")
        if self.kind == "cosine_taper" and not 0 < self.taper <= self.width:
            raise ValueError("cosine_taper needs 0 < taper <= width")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def support_radius(self) -> float:
        """Radius of the smallest centered ball containing the support."""
        if self.kind == "gaussian":
            return np.inf if self.cutoff is None else float(self.cutoff)
        if self.kind == "constant":
            return np.inf
        return float(self.width)

    def radius(self, coords: Sequence[np.ndarray]) -> np.ndarray:
        coords = [np.asarray(c, dtype=float) for c in coords]
        center = self.center or (0.0,) * len(coords)
        if len(center) != len(coords):
            raise ValueError(f"profile centered in R^{len(center)} evaluated in R^{len(coords)}")
        r2 = sum((c - c0) ** 2 for c, c0 in zip(coords, center))
        return np.sqrt(r2)

    def __call__(self, *coords) -> np.ndarray:
        if len(coords) == 1 and isinstance(coords[0], (tuple, list)):
            coords = tuple(coords[0])
        r = self.radius(coords)
        a = self.amplitude
        if self.kind == "constant":
            return np.full(r.shape, a, dtype=float)
        if self.kind == "gaussian":
            out = a * np.exp(-0.5 * (r / self.width) ** 2)
            if self.cutoff is not None:
                out = np.where(r < self.cutoff, out, 0.0)
            return out
        if self.kind == "indicator":
            return np.where(r <= self.width, a, 0.0)
        if self.kind == "bump":
            s2 = np.minimum((r / self.width) ** 2, 1.0)
            with np.errstate(divide="ignore", over="ignore"):
                inner = np.where(s2 < 1.0, 1.0 - 1.0 / (1.0 - s2 + (s2 >= 1.0)), -np.inf)
            return a * np.exp(inner)
        # cosine_taper: plateau, then a raised-cosine shoulder down to zero at `width`
        start = self.width - self.taper
        s = np.clip((r - start) / self.taper, 0.0, 1.0)
        return a * 0.5 * (1.0 + np.cos(np.pi * s))

    @classmethod
    def from_dict(cls, d: dict) -> "Profile":
        d = dict(d)
        if "center" in d:
            c = d["center"]
            d["center"] = tuple(c) if isinstance(c, (list, tuple)) else (c,)
        return cls(**d)
