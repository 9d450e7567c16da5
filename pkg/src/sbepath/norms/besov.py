"""Besov norms of gridded densities by smooth Littlewood-Paley blocks.

Frequencies are angular (``exp(i xi . x)``).  With a smooth radial cutoff
``theta`` equal to 1 on |s| <= 1 and 0 on |s| >= 2, the blocks are

    low-pass  theta(|xi| / N_0)
    block j   theta(|xi| / N_j) - theta(|xi| / N_{j-1}),   N_j = N_0 2^j,

so block j lives on the annulus N_j/2 <= |xi| <= 2 N_j and the blocks sum
to one.  The norm is ``max`` (or sum) over blocks of ``N_j^alpha`` times the
L^p norm of the block, the low-pass block entering unweighted.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import fft as sp_fft

from ..errors import ValidationError
from ..measures import GaussianMeasure, GridDensity, GridSpec, UniformMeasure, _interval_mass, _next_smooth

__all__ = [
    "BesovParams",
    "BesovReport",
    "cutoff",
    "block_multipliers",
    "deposit_grid",
    "density_on_grid",
    "besov_report",
    "besov_norm",
]


def _exponent(x) -> float:
    if x in ("inf", "infinity", "Infinity"):
        return math.inf
    return float(x)


@dataclass(frozen=True)
class BesovParams:
    """``alpha``: smoothness; ``p``: integrability; ``q``: summability over blocks.

    ``blocks``/``base_frequency`` left as ``None`` are filled from the grid:
    the top block sits at the resolution limit ``pi / (4 h)`` and the base
    frequency at ``2 pi`` over the grid extent.
    """

    alpha: float
    p: float = 2.0
    q: float = math.inf
    blocks: int | None = None
    base_frequency: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "p", _exponent(self.p))
        object.__setattr__(self, "q", _exponent(self.q))
        if not (self.p >= 1 and self.q >= 1):
            raise ValidationError("Besov indices p, q must lie in [1, inf]")
        if self.blocks is not None and (int(self.blocks) != self.blocks or self.blocks < 3):
            raise ValidationError("at least 3 frequency blocks are required")
        if self.base_frequency is not None and not self.base_frequency > 0:
            raise ValidationError("base_frequency must be positive")

    def to_dict(self) -> dict:
        out = asdict(self)
        for key in ("p", "q"):
            if math.isinf(out[key]):
                out[key] = "inf"
        return out


@dataclass
class BesovReport:
    value: float
    frequencies: list          # N_0, N_1, ..., N_J
    block_norms: list          # L^p norm of the low-pass block, then of each annulus block
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def cutoff(s):
    """Smooth radial profile: 1 for s <= 1, 0 for s >= 2."""
    x = np.clip(np.asarray(s, dtype=np.float64) - 1.0, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
        b = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1.0 - x, 1.0)), 0.0)
    return 1.0 - a / (a + b)


def _frequency_radius(shape, spacing) -> np.ndarray:
    freqs = [2 * np.pi * sp_fft.fftfreq(n, d=h) for n, h in zip(shape, spacing)]
    mesh = np.meshgrid(*freqs, indexing="ij")
    return np.sqrt(sum(m * m for m in mesh))


def block_multipliers(radius: np.ndarray, frequencies) -> list[np.ndarray]:
    """Low-pass and annulus multipliers on a grid of |xi| values."""
    prev = cutoff(radius / frequencies[0])
    out = [prev]
    for n in frequencies[1:]:
        cur = cutoff(radius / n)
        out.append(cur - prev)
        prev = cur
    return out


def _resolve_frequencies(grid: GridSpec, params: BesovParams) -> list[float]:
    h = max(grid.spacing)
    top = math.pi / (4.0 * h)
    if params.base_frequency is not None:
        base = params.base_frequency
        if params.blocks is None:
            blocks = int(math.floor(math.log2(top / base) + 1e-12))
        else:
            blocks = int(params.blocks)
    else:
        extent = max(n * s for n, s in zip(grid.shape, grid.spacing))
        blocks = params.blocks
        if blocks is None:
            blocks = int(math.floor(math.log2(top * extent / (2 * math.pi)) + 1e-12))
        base = top / 2.0 ** blocks
    if blocks < 3:
        raise ValidationError(f"grid spacing {h:.4g} resolves only {max(blocks, 0)} blocks; 3 are required")
    freqs = [base * 2.0 ** j for j in range(blocks + 1)]
    if freqs[-1] > top * (1 + 1e-12):
        raise ValidationError(
            f"top block N={freqs[-1]:.4g} needs 4 cells per wavelength; the grid allows N <= {top:.4g}")
    return freqs


def _lp(values: np.ndarray, p: float, cell: float) -> float:
    a = np.abs(values)
    if math.isinf(p):
        return float(a.max())
    return float((np.sum(a ** p) * cell) ** (1.0 / p))


def besov_report(rho: GridDensity, params: BesovParams, summability: str | None = None) -> BesovReport:
    """Block decomposition and the combined norm.

    ``summability`` overrides ``params.q`` with ``'sup'`` (q = inf) or
    ``'sum'`` (q = 1).
    """
    q = params.q
    if summability is not None:
        if summability not in ("sup", "sum"):
            raise ValidationError("summability must be 'sup' or 'sum'")
        q = math.inf if summability == "sup" else 1.0
    grid = rho.grid
    freqs = _resolve_frequencies(grid, params)
    if not np.any(rho.values):
        return BesovReport(0.0, freqs, [0.0] * len(freqs), params.to_dict())
    # zero-pad so the periodic convolution does not wrap: the low-pass kernel
    # decays on the scale 1 / N_0
    pad = [int(math.ceil(12.0 / (freqs[0] * h))) for h in grid.spacing]
    shape = tuple(_next_smooth(n + 2 * pd) for n, pd in zip(grid.shape, pad))
    data = np.zeros(shape)
    data[tuple(slice(0, n) for n in grid.shape)] = rho.values
    spectrum = sp_fft.rfftn(data)
    radius = _frequency_radius(shape, grid.spacing)[..., : spectrum.shape[-1]]
    cell = grid.cell_volume
    norms = []
    for mult in block_multipliers(radius, freqs):
        block = sp_fft.irfftn(spectrum * mult, s=shape)
        norms.append(_lp(block, params.p, cell))
    weighted = [norms[0]] + [n * f ** params.alpha for n, f in zip(norms[1:], freqs[1:])]
    if math.isinf(q):
        value = max(weighted)
    else:
        value = sum(w ** q for w in weighted) ** (1.0 / q)
    return BesovReport(float(value), freqs, norms, params.to_dict())


def besov_norm(rho: GridDensity, params: BesovParams, summability: str | None = None) -> float:
    return besov_report(rho, params, summability).value


def deposit_grid(mu, grid: GridSpec) -> GridDensity:
    """Cloud-in-cell deposit of an atomic measure onto cell centres.

    Each atom spreads its weight multilinearly over the 2^d surrounding cell
    centres, so the deposited mass equals the total mass up to rounding.
    """
    atoms = np.asarray(mu.atoms, dtype=np.float64)
    weights = np.asarray(mu.weights, dtype=np.float64)
    d = grid.dim
    if atoms.shape[1] != d:
        raise ValidationError(f"measure has dimension {atoms.shape[1]}, grid has {d}")
    out = np.zeros(grid.shape)
    if atoms.shape[0] == 0:
        return GridDensity(grid, out)
    origin = np.array(grid.origin)
    spacing = np.array(grid.spacing)
    shape = np.array(grid.shape)
    # coordinates in units of cells, measured from the first cell centre
    u = (atoms - origin) / spacing - 0.5
    eps = 1e-9
    bad = np.any((u < -eps) | (u > shape - 1 + eps), axis=1)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise ValidationError(f"atom {atoms[i].tolist()} lies outside the grid's cell centres")
    u = np.clip(u, 0.0, shape - 1)
    base = np.minimum(np.floor(u).astype(np.int64), np.maximum(shape - 2, 0))
    frac = u - base
    for corner in range(1 << d):
        w = weights.copy()
        idx = []
        for axis in range(d):
            up = (corner >> axis) & 1
            w = w * (frac[:, axis] if up else 1.0 - frac[:, axis])
            idx.append(np.minimum(base[:, axis] + up, shape[axis] - 1))
        np.add.at(out, tuple(idx), w)
    return GridDensity(grid, out / grid.cell_volume)


def density_on_grid(mu, grid: GridSpec) -> GridDensity:
    """Cell averages of an analytic measure, or the deposit of an atomic one."""
    if isinstance(mu, GridDensity):
        if mu.grid != grid:
            raise ValidationError("density lives on a different grid")
        return mu
    if hasattr(mu, "atoms"):
        return deposit_grid(mu, grid)
    edges = [o + h * np.arange(n + 1) for o, h, n in zip(grid.origin, grid.spacing, grid.shape)]
    if isinstance(mu, GaussianMeasure):
        # isotropic Gaussians factorise over the axes
        factors = [_interval_mass((e[:-1] - c) / mu.sigma, (e[1:] - c) / mu.sigma)
                   for e, c in zip(edges, mu.center)]
        cells = factors[0]
        for f in factors[1:]:
            cells = np.multiply.outer(cells, f)
        return GridDensity(grid, mu.mass * cells / grid.cell_volume)
    if isinstance(mu, UniformMeasure):
        e = edges[0]
        overlap = np.clip(np.minimum(e[1:], mu.hi) - np.maximum(e[:-1], mu.lo), 0.0, None)
        return GridDensity(grid, mu.mass * overlap / (mu.hi - mu.lo) / grid.cell_volume)
    raise ValidationError(f"cannot place a {type(mu).__name__} on a grid")
