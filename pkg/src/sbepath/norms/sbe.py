"""The small-ball (SBE) norm by nested quadrature over radius and centre.

For a finite measure ``mu`` on R^d with small-ball field
``F(r, y) = mu(B(y, r))`` the norm is

    || r^{-alpha-d} D_k F(r, y) ||  in  L^q(dy) L^p(dr / r),   k = ceil(alpha + d - 1).

The radius integral runs over a geometric grid aligned with the dyadic
scales, so ``F(r / 2^j)`` is read off the same table.  Two ways of closing
the domain are offered:

* truncated (default): r in [r_min, r_max]; the centre grid must cover the
  support inflated by r_max, which makes the truncated integral exact in y.
* far field: on the core ball |y - c| <= Y the radius integral is carried
  to the scale where ``D_k F`` vanishes identically, and outside the core
  the measure is replaced by a point mass at its barycentre, whose
  contribution is integrated in closed form.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from ..deltak import delta_k_coeffs, is_order_boundary, order_for
from ..errors import ComputationError, CoverageError, ValidationError

__all__ = [
    "SbeParams",
    "SbeGrid",
    "SbeReport",
    "resolve_sbe_grid",
    "sbe_report",
    "sbe_norm",
    "sbe_sensitivity",
    "sbe_refinement",
    "dirac_profile_constant",
]

_BLOCK = 1 << 21


def _exponent(x) -> float:
    if x in ("inf", "infinity", "Infinity"):
        return math.inf
    return float(x)


@dataclass(frozen=True)
class SbeParams:
    """Norm indices and quadrature grids.

    ``r_min``/``r_max``/``y_spacing``/``y_bounds`` left as ``None`` are
    resolved from the measure (see :func:`resolve_sbe_grid`).
    """

    alpha: float
    p: float = 2.0
    q: float = 2.0
    r_min: float | None = None
    r_max: float | None = None
    points_per_octave: int = 8
    y_spacing: float | None = None
    y_bounds: tuple | None = None
    far_field: bool = False
    far_field_radius: float | None = None
    max_points_per_axis: int = 8192

    def __post_init__(self):
        object.__setattr__(self, "p", _exponent(self.p))
        object.__setattr__(self, "q", _exponent(self.q))
        if not self.alpha > 0:
            raise ValidationError(f"alpha must be positive, got {self.alpha}")
        if not (self.p >= 1 and self.q >= 1):
            raise ValidationError("p and q must lie in [1, inf]")
        if int(self.points_per_octave) != self.points_per_octave or self.points_per_octave < 4:
            raise ValidationError("points_per_octave must be an integer >= 4")
        if self.r_min is not None and not self.r_min > 0:
            raise ValidationError("r_min must be positive")
        if self.r_min is not None and self.r_max is not None and not self.r_min < self.r_max:
            raise ValidationError(f"r_min ({self.r_min}) must be below r_max ({self.r_max})")
        if self.y_spacing is not None and not self.y_spacing > 0:
            raise ValidationError("y_spacing must be positive")
        if self.far_field and self.r_max is not None:
            raise ValidationError("r_max is determined automatically in far-field mode")

    def order(self, d: int) -> int:
        return order_for(self.alpha, d)

    def to_dict(self) -> dict:
        out = asdict(self)
        for key in ("p", "q"):
            if math.isinf(out[key]):
                out[key] = "inf"
        return out


@dataclass(frozen=True, eq=False)
class SbeGrid:
    """Fully resolved quadrature grid for one measure."""

    k: int
    coeffs: tuple
    radii: np.ndarray          # extended grid, starts (k+1) octaves below r_min
    n_radii: int               # number of radii in [r_min, r_max]
    points_per_octave: int
    y_axes: tuple              # one 1-D array of centre coordinates per dimension
    y_spacing: np.ndarray
    core_center: np.ndarray | None = None
    core_radius: float | None = None

    @property
    def r_min(self) -> float:
        return float(self.radii[-self.n_radii])

    @property
    def r_max(self) -> float:
        return float(self.radii[-1])

    @property
    def n_centers(self) -> int:
        return int(np.prod([a.size for a in self.y_axes]))

    def centers(self) -> np.ndarray:
        mesh = np.meshgrid(*self.y_axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)


@dataclass
class SbeReport:
    value: float
    k: int
    r_min: float
    r_max: float
    n_radii: int
    n_centers: int
    params: dict
    boundary_flags: dict = field(default_factory=dict)
    far_field_share: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def _geometric(r_min: float, r_max: float, ppo: int, k: int) -> tuple[np.ndarray, int]:
    n = int(math.floor(ppo * math.log2(r_max / r_min) + 1e-9)) + 1
    n = max(n, 2)
    idx = np.arange(-(k + 1) * ppo, n)
    return r_min * 2.0 ** (idx / ppo), n


def _lattice(lo: float, hi: float, h: float) -> np.ndarray:
    # grid points on the global lattice h*Z covering [lo, hi]
    i0 = math.floor(lo / h)
    i1 = math.ceil(hi / h)
    return h * np.arange(i0, i1 + 1, dtype=np.float64)


def resolve_sbe_grid(mu, params: SbeParams) -> SbeGrid:
    """Resolve the radius and centre grids of ``params`` against ``mu``."""
    d = mu.dim
    k = params.order(d)
    coeffs = delta_k_coeffs(k).coeffs
    ppo = int(params.points_per_octave)
    lo, hi = (np.asarray(v, dtype=np.float64) for v in mu.support_box())
    center, radius = mu.support_ball()
    r_min = params.r_min if params.r_min is not None else float(mu.default_r_min())
    if not r_min > 0:
        raise ValidationError("could not determine a positive r_min for this measure")

    if params.far_field:
        core = params.far_field_radius
        if core is None:
            core = max(8.0 * radius, radius + 16.0 * r_min)
        if not core > radius:
            raise ValidationError("far-field radius must exceed the support radius")
        # beyond 2^{k+1}(|y - c| + R) every dyadic ball holds the whole mass
        r_max = 2.0 ** (k + 1) * (core + radius) * 2.0 ** (1.0 / ppo)
        radii, n_r = _geometric(r_min, r_max, ppo, k)
        spacing = params.y_spacing or max(r_min / 2.0, 2.0 * core / params.max_points_per_axis)
        axes = tuple(_lattice(c - core, c + core, spacing) for c in center)
        return SbeGrid(k, coeffs, radii, n_r, ppo, axes, np.full(d, spacing),
                       np.asarray(center, dtype=np.float64), float(core))

    diameter = float(np.linalg.norm(hi - lo))
    r_max = params.r_max if params.r_max is not None else diameter
    if not r_max > r_min:
        r_max = r_min * 2.0 ** (k + 4)
    radii, n_r = _geometric(r_min, r_max, ppo, k)
    r_top = float(radii[-1])
    if params.y_bounds is not None:
        b = np.asarray(params.y_bounds, dtype=np.float64).reshape(2, d)
        y_lo, y_hi = b[0], b[1]
        need_lo, need_hi = lo - r_top, hi + r_top
        short = np.maximum(y_lo - need_lo, need_hi - y_hi)
        if np.any(short > 1e-12 * max(1.0, r_top)):
            raise CoverageError(
                f"centre grid [{y_lo.tolist()}, {y_hi.tolist()}] does not cover the support "
                f"[{lo.tolist()}, {hi.tolist()}] inflated by r_max={r_top:.6g}"
            )
    else:
        y_lo, y_hi = lo - r_top, hi + r_top
    extent = float(np.max(y_hi - y_lo)) if d else 0.0
    per_axis = params.max_points_per_axis if d == 1 else max(16, int(params.max_points_per_axis ** (1.0 / d)))
    spacing = params.y_spacing or max(r_min / 2.0, extent / per_axis)
    if params.y_bounds is not None:
        # anchored at the user's lower corner so the grid moves with the bounds
        axes = tuple(a + spacing * np.arange(int(math.ceil((b_ - a) / spacing - 1e-9)) + 1)
                     for a, b_ in zip(y_lo, y_hi))
    else:
        axes = tuple(_lattice(a, b_, spacing) for a, b_ in zip(y_lo, y_hi))
    return SbeGrid(k, coeffs, radii, n_r, ppo, axes, np.full(d, spacing))


def dirac_profile_constant(k: int, alpha: float, d: int, p: float) -> float:
    """L^p(dr/r) norm of ``r^{-alpha-d} D_k 1[r >= 1]``.

    For a unit point mass at distance rho the inner norm equals this
    constant times ``rho^{-alpha-d}``.
    """
    coeffs = delta_k_coeffs(k).coeffs
    partial = np.cumsum([float(a) for a in coeffs])[: k + 1]
    s = alpha + d
    if math.isinf(p):
        return float(max(abs(A) * 2.0 ** (-J * s) for J, A in enumerate(partial)))
    sp = s * p
    total = sum(abs(A) ** p * 2.0 ** (-J * sp) * (1 - 2.0 ** -sp) / sp for J, A in enumerate(partial))
    return float(total ** (1.0 / p))


def _inner_norms(mu, grid: SbeGrid, alpha: float, p: float, centers: np.ndarray) -> np.ndarray:
    """L^p(dr/r) norm over the radius grid for each centre."""
    d = mu.dim
    ppo = grid.points_per_octave
    n_r = grid.n_radii
    offset = (grid.k + 1) * ppo
    r = grid.radii[offset:]
    weight = r ** (-(alpha + d))
    du = math.log(2.0) / ppo
    trap = np.full(n_r, du)
    trap[0] = trap[-1] = 0.5 * du
    out = np.empty(centers.shape[0])
    step = max(1, _BLOCK // grid.radii.size)
    for start in range(0, centers.shape[0], step):
        block = centers[start:start + step]
        table = np.asarray(mu.ball_profile(block, grid.radii), dtype=np.float64)
        diff = np.zeros((block.shape[0], n_r))
        for j, a in enumerate(grid.coeffs):
            lo = offset - j * ppo
            diff += float(a) * table[:, lo:lo + n_r]
        g = np.abs(diff) * weight
        if not np.all(np.isfinite(g)):
            raise ComputationError("non-finite value in the dyadic differences")
        if math.isinf(p):
            out[start:start + step] = g.max(axis=1)
        else:
            out[start:start + step] = (g ** p @ trap) ** (1.0 / p)
    return out


def sbe_report(mu, params: SbeParams, grid: SbeGrid | None = None) -> SbeReport:
    """Evaluate the norm and return it with the resolved truncation data."""
    d = mu.dim
    if grid is None:
        grid = resolve_sbe_grid(mu, params)
    flags = {
        "order_boundary": is_order_boundary(params.alpha, d),
        "alpha_integer": float(params.alpha).is_integer(),
        "two_alpha_integer": float(2 * params.alpha).is_integer(),
    }
    base = dict(k=grid.k, r_min=grid.r_min, r_max=grid.r_max, n_radii=grid.n_radii,
                n_centers=grid.n_centers, params=params.to_dict(), boundary_flags=flags)
    if mu.total_mass == 0 and getattr(mu, "size", 1) == 0:
        return SbeReport(value=0.0, **base)

    centers = grid.centers()
    far = 0.0
    if grid.core_radius is not None:
        dist = np.sqrt(((centers - grid.core_center) ** 2).sum(axis=1))
        centers = centers[dist <= grid.core_radius]
    inner = _inner_norms(mu, grid, params.alpha, params.p, centers)
    cell = float(np.prod(grid.y_spacing))
    q = params.q

    if grid.core_radius is not None:
        mass = abs(mu.total_mass)
        const = mass * dirac_profile_constant(grid.k, params.alpha, d, params.p)
        s = params.alpha + d
        if math.isinf(q):
            far = const * grid.core_radius ** (-s)
        else:
            sphere = 2 * math.pi ** (d / 2) / math.gamma(d / 2)
            far = const ** q * sphere * grid.core_radius ** (d - s * q) / (s * q - d)

    if math.isinf(q):
        core_val = float(inner.max()) if inner.size else 0.0
        value = max(core_val, far)
        share = 1.0 if far > core_val else 0.0
    else:
        core_val = float(np.sum(inner ** q) * cell)
        value = (core_val + far) ** (1.0 / q)
        share = far / (core_val + far) if core_val + far > 0 else 0.0
    return SbeReport(value=float(value), far_field_share=float(share), **base)


def sbe_norm(mu, params: SbeParams) -> float:
    """The SBE norm of ``mu`` (see the module docstring for the quadrature)."""
    return sbe_report(mu, params).value


def sbe_sensitivity(mu, params: SbeParams, factors=(1.0, 0.5, 0.25, 0.125)) -> list[dict]:
    """Norm values as r_min is scaled by ``factors``; other grids held fixed."""
    grid = resolve_sbe_grid(mu, params)
    rows = []
    for f in factors:
        r_min = grid.r_min * f
        spacing = min(float(grid.y_spacing[0]), r_min / 2.0) if params.y_spacing is None else params.y_spacing
        trial = replace(params, r_min=r_min, y_spacing=spacing,
                        r_max=None if params.far_field else grid.r_max)
        rep = sbe_report(mu, trial)
        rows.append({"r_min": r_min, "value": rep.value})
    return rows


def sbe_refinement(mu, params: SbeParams, levels: int = 2) -> list[dict]:
    """Norm values as the radius and centre grids are refined by factors of 2."""
    grid = resolve_sbe_grid(mu, params)
    rows = []
    for lvl in range(levels + 1):
        trial = replace(
            params,
            r_min=grid.r_min,
            r_max=None if params.far_field else grid.r_max,
            points_per_octave=grid.points_per_octave * 2 ** lvl,
            y_spacing=float(grid.y_spacing[0]) / 2 ** lvl,
        )
        rows.append({"points_per_octave": trial.points_per_octave, "y_spacing": trial.y_spacing,
                     "value": sbe_report(mu, trial).value})
    return rows
