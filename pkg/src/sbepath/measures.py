"""Finite measures that can answer small-ball queries on grids.

Every measure here exposes the same small surface used by the norm engines:

* ``dim`` and ``total_mass``
* ``support_box()`` and ``support_ball()`` (centre, radius) outside which the
  mass is zero or negligible
* ``ball_profile(centers, radii)``: the matrix ``mu(B(y_i, r_j))`` for closed
  Euclidean balls
* ``default_r_min()``: the finest radius at which the representation is
  meaningful

Atomic measures live in :mod:`sbepath.occupation`; this module holds the
analytic test measures and the gridded densities.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import special, stats

from ._backend import kernels
from .errors import ValidationError

__all__ = ["GaussianMeasure", "UniformMeasure", "GridSpec", "GridDensity"]


def _centers(y, dim: int) -> np.ndarray:
    arr = np.asarray(y, dtype=np.float64)
    if arr.ndim == 1 and dim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise ValidationError(f"centres must have shape (n, {dim})")
    return arr


def _interval_mass(lo, hi):
    """Standard normal mass of [lo, hi], accurate in both tails."""
    lo, hi = np.broadcast_arrays(np.asarray(lo, float), np.asarray(hi, float))
    upper = lo > 0
    out = np.where(upper, special.ndtr(-lo) - special.ndtr(-hi), special.ndtr(hi) - special.ndtr(lo))
    return np.clip(out, 0.0, None)


@dataclass(frozen=True)
class GaussianMeasure:
    """Isotropic Gaussian bump ``mass * N(center, sigma^2 I)``."""

    center: tuple
    sigma: float
    mass: float = 1.0

    def __post_init__(self):
        c = tuple(float(v) for v in np.atleast_1d(self.center))
        object.__setattr__(self, "center", c)
        if not self.sigma > 0:
            raise ValidationError("sigma must be positive")

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def total_mass(self) -> float:
        return float(self.mass)

    def support_ball(self):
        # chi tail beyond sqrt(d) + 9 standard deviations is below 1e-18
        return np.array(self.center), self.sigma * (np.sqrt(self.dim) + 9.0)

    def support_box(self):
        c, r = self.support_ball()
        return c - r, c + r

    def default_r_min(self) -> float:
        return self.sigma / 256.0

    def density(self, x) -> np.ndarray:
        pts = _centers(x, self.dim)
        z2 = np.sum((pts - np.array(self.center)) ** 2, axis=1) / self.sigma ** 2
        return self.mass * np.exp(-0.5 * z2) / (2 * np.pi * self.sigma ** 2) ** (self.dim / 2)

    def ball_profile(self, centers, radii) -> np.ndarray:
        y = _centers(centers, self.dim)
        r = np.asarray(radii, dtype=np.float64)[None, :]
        dist = np.sqrt(np.sum((y - np.array(self.center)) ** 2, axis=1))[:, None]
        if self.dim == 1:
            return self.mass * _interval_mass((dist - r) / self.sigma, (dist + r) / self.sigma)
        return self.mass * stats.ncx2.cdf((r / self.sigma) ** 2, self.dim, (dist / self.sigma) ** 2)

    def translate(self, shift) -> "GaussianMeasure":
        s = np.atleast_1d(np.asarray(shift, dtype=np.float64))
        return GaussianMeasure(tuple(np.array(self.center) + s), self.sigma, self.mass)


@dataclass(frozen=True)
class UniformMeasure:
    """``mass`` spread uniformly over the interval [lo, hi] (d = 1)."""

    lo: float
    hi: float
    mass: float = 1.0

    def __post_init__(self):
        if not self.hi > self.lo:
            raise ValidationError("uniform measure needs lo < hi")

    dim = 1

    @property
    def total_mass(self) -> float:
        return float(self.mass)

    def support_box(self):
        return np.array([self.lo]), np.array([self.hi])

    def support_ball(self):
        return np.array([0.5 * (self.lo + self.hi)]), 0.5 * (self.hi - self.lo)

    def default_r_min(self) -> float:
        return (self.hi - self.lo) / 1024.0

    def ball_profile(self, centers, radii) -> np.ndarray:
        y = _centers(centers, 1)[:, :1]
        r = np.asarray(radii, dtype=np.float64)[None, :]
        left = np.maximum(y - r, self.lo)
        right = np.minimum(y + r, self.hi)
        return self.mass * np.clip(right - left, 0.0, None) / (self.hi - self.lo)

    def translate(self, shift) -> "UniformMeasure":
        s = float(np.atleast_1d(shift)[0])
        return UniformMeasure(self.lo + s, self.hi + s, self.mass)


@dataclass(frozen=True)
class GridSpec:
    """Uniform cell grid: cell ``i`` covers ``origin + [i, i+1) * spacing``."""

    origin: tuple
    spacing: tuple
    shape: tuple

    def __post_init__(self):
        o = tuple(float(v) for v in np.atleast_1d(self.origin))
        h = tuple(float(v) for v in np.atleast_1d(self.spacing))
        n = tuple(int(v) for v in np.atleast_1d(self.shape))
        if not (len(o) == len(h) == len(n)):
            raise ValidationError("grid origin, spacing and shape must have equal length")
        if any(v <= 0 for v in h) or any(v < 1 for v in n):
            raise ValidationError("grid spacing must be positive and shape >= 1")
        object.__setattr__(self, "origin", o)
        object.__setattr__(self, "spacing", h)
        object.__setattr__(self, "shape", n)

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axes(self) -> list[np.ndarray]:
        """Cell-centre coordinates along each axis."""
        return [o + (np.arange(n) + 0.5) * h for o, h, n in zip(self.origin, self.spacing, self.shape)]

    def cell_centers(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def upper(self) -> np.ndarray:
        return np.array(self.origin) + np.array(self.spacing) * np.array(self.shape)

    @classmethod
    def covering(cls, lo: Sequence[float], hi: Sequence[float], spacing: float | Sequence[float],
                 pad: float = 0.0, fft_friendly: bool = True) -> "GridSpec":
        """Smallest grid with the given spacing covering [lo - pad, hi + pad]."""
        lo = np.atleast_1d(np.asarray(lo, dtype=np.float64)) - pad
        hi = np.atleast_1d(np.asarray(hi, dtype=np.float64)) + pad
        h = np.broadcast_to(np.atleast_1d(np.asarray(spacing, dtype=np.float64)), lo.shape)
        counts = np.maximum(1, np.ceil((hi - lo) / h).astype(int) + 2)
        if fft_friendly:
            counts = np.array([_next_smooth(int(c)) for c in counts])
        mid = 0.5 * (lo + hi)
        origin = mid - 0.5 * counts * h
        return cls(tuple(origin), tuple(h), tuple(counts))


def _next_smooth(n: int) -> int:
    """Smallest 2^a 3^b 5^c >= n."""
    best = 1 << max(0, (n - 1).bit_length())
    p5 = 1
    while p5 < 2 * n:
        p35 = p5
        while p35 < 2 * n:
            v = p35
            while v < n:
                v *= 2
            best = min(best, v)
            p35 *= 3
        p5 *= 5
    return best


@dataclass(frozen=True, eq=False)
class GridDensity:
    """Piecewise-constant density on a :class:`GridSpec` (signed values allowed)."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.shape != self.grid.shape:
            raise ValidationError(f"density shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValidationError("density values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, func, grid: GridSpec) -> "GridDensity":
        """Sample ``func`` (vectorised over an (n, d) array) at cell centres."""
        vals = np.asarray(func(grid.cell_centers()), dtype=np.float64).reshape(grid.shape)
        return cls(grid, vals)

    @property
    def dim(self) -> int:
        return self.grid.dim

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.values) * self.grid.cell_volume)

    def __sub__(self, other: "GridDensity") -> "GridDensity":
        if other.grid != self.grid:
            raise ValidationError("densities live on different grids")
        return GridDensity(self.grid, self.values - other.values)

    def _occupied(self):
        nz = np.nonzero(self.values)
        if nz[0].size == 0:
            return None
        lo = np.array([o + i.min() * h for o, h, i in zip(self.grid.origin, self.grid.spacing, nz)])
        hi = np.array([o + (i.max() + 1) * h for o, h, i in zip(self.grid.origin, self.grid.spacing, nz)])
        return lo, hi

    def support_box(self):
        occ = self._occupied()
        if occ is None:
            c = np.array(self.grid.origin)
            return c, c.copy()
        return occ

    def support_ball(self):
        lo, hi = self.support_box()
        return 0.5 * (lo + hi), 0.5 * float(np.linalg.norm(hi - lo))

    def default_r_min(self) -> float:
        return 2.0 * max(self.grid.spacing)

    def ball_profile(self, centers, radii) -> np.ndarray:
        """Exact for d = 1 (piecewise-linear cumulative); cell-centre atoms for d >= 2."""
        y = _centers(centers, self.dim)
        r = np.asarray(radii, dtype=np.float64)
        if self.dim == 1:
            h = self.grid.spacing[0]
            edges = self.grid.origin[0] + h * np.arange(self.grid.shape[0] + 1)
            cum = np.concatenate([[0.0], np.cumsum(self.values * h)])
            right = np.interp(y[:, :1] + r[None, :], edges, cum)
            left = np.interp(y[:, :1] - r[None, :], edges, cum)
            return right - left
        w = self.values.ravel() * self.grid.cell_volume
        keep = w != 0
        return kernels.ball_mass_hist(self.grid.cell_centers()[keep], w[keep], y, r)

    def translate(self, shift) -> "GridDensity":
        s = np.atleast_1d(np.asarray(shift, dtype=np.float64))
        g = GridSpec(tuple(np.array(self.grid.origin) + s), self.grid.spacing, self.grid.shape)
        return GridDensity(g, self.values)
