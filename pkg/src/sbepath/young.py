"""Nonlinear Young integration against occupation measures, ODEs and flows.

Conventions.  A path ``omega`` is sampled on its own time grid and its
occupation measure uses left-endpoint atoms (see :mod:`sbepath.occupation`).
For a drift ``f(t, y)`` and a path ``theta`` the local germ on [s, t] is

    chi_{st} = sum_i w_i f(s, theta_s - a_i),

where ``(a_i, w_i)`` are the atoms and weights of the occupation measure of
``omega`` over [s, t].  Summing the germ over a partition and refining gives
the integral ``int f(s, theta_s - omega_s) ds``.  The ODE
``x_t = x0 - omega_t + int f(s, x_s) ds`` is solved for ``theta = x + omega``
by Picard iteration of ``theta = x0 + int f(s, theta_s - omega_s) ds`` on a
dyadic grid.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import BudgetError, ConvergenceError, DivergenceError, ValidationError
from .measures import GridDensity, GridSpec
from .paths import SampledPath

__all__ = [
    "DriftField",
    "SewingGerm",
    "SewingResult",
    "YoungParams",
    "BudgetReport",
    "check_budget",
    "averaged_field",
    "sewing_integrate",
    "young_integral",
    "OdeResult",
    "solve_ode",
    "FlowResult",
    "flow",
    "check_composition",
    "inverse_flow",
    "flow_jacobian",
]


# ----------------------------------------------------------------------
# gridded drifts
# ----------------------------------------------------------------------


class DriftField:
    """Time-dependent vector field sampled on a uniform spatial node grid.

    ``values`` has shape ``(m, *shape, d)``: slice ``k`` holds ``f(times[k], .)``
    at the nodes ``origin + i * spacing``.  Space is interpolated
    multilinearly and time linearly (constant beyond the first and last
    slice).  Outside the node grid the field is zero when ``zero_extend``
    is set and an error otherwise.

    The declared regularity ``(alpha2, p2, q2)`` and time-variation
    exponent ``r2`` feed the budget checks; with ``check_regularity`` the
    Besov norm of every slice is measured at the declared indices.
    """

    def __init__(self, times, origin, spacing, values, *, alpha2: float = 1.0, p2: float = 2.0,
                 q2: float = math.inf, r2: float = 1.0, check_regularity: bool = False,
                 zero_extend: bool = True):
        t = np.array(times, dtype=np.float64).ravel()
        o = np.array(origin, dtype=np.float64).ravel()
        h = np.array(spacing, dtype=np.float64).ravel()
        v = np.array(values, dtype=np.float64)
        d = o.size
        if h.size != d or d < 1:
            raise ValidationError("origin and spacing must have the same positive length")
        if np.any(h <= 0):
            raise ValidationError("grid spacing must be positive")
        if v.ndim != d + 2 or v.shape[0] != t.size or v.shape[-1] != d:
            raise ValidationError(f"values must have shape (m, n_1..n_{d}, {d}) with m = {t.size}")
        if any(n < 2 for n in v.shape[1:-1]):
            raise ValidationError("each spatial axis needs at least 2 nodes")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValidationError("drift times must be strictly increasing")
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(t)) and np.all(np.isfinite(o))):
            raise ValidationError("drift field values must be finite")
        if not p2 >= 1 or not q2 >= 1 or not r2 >= 1:
            raise ValidationError("p2, q2 and r2 must be >= 1")
        for a in (t, o, h, v):
            a.flags.writeable = False
        self.times, self.origin, self.spacing, self.values = t, o, h, v
        self.alpha2, self.p2, self.q2, self.r2 = float(alpha2), float(p2), float(q2), float(r2)
        self.zero_extend = bool(zero_extend)
        self._gradient = None
        self.measured_regularity = self.measure_regularity() if check_regularity else None

    # construction helpers --------------------------------------------

    @classmethod
    def from_function(cls, func: Callable, times, origin, spacing, shape, **kw) -> "DriftField":
        """Sample ``func(t, points) -> (n, d)`` at every node and time."""
        o = np.atleast_1d(np.asarray(origin, dtype=np.float64))
        h = np.broadcast_to(np.atleast_1d(np.asarray(spacing, dtype=np.float64)), o.shape)
        shape = tuple(int(n) for n in np.atleast_1d(shape))
        axes = [oo + hh * np.arange(n) for oo, hh, n in zip(o, h, shape)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        t = np.atleast_1d(np.asarray(times, dtype=np.float64))
        vals = np.stack([np.asarray(func(float(tk), pts), dtype=np.float64).reshape(*shape, o.size) for tk in t])
        return cls(t, o, h, vals, **kw)

    @classmethod
    def constant(cls, value, origin, spacing, shape, times=(0.0,), **kw) -> "DriftField":
        c = np.atleast_1d(np.asarray(value, dtype=np.float64))
        return cls.from_function(lambda t, x: np.broadcast_to(c, x.shape), times, origin, spacing, shape, **kw)

    # properties -------------------------------------------------------

    @property
    def dim(self) -> int:
        return self.origin.size

    @property
    def grid_shape(self) -> tuple:
        return tuple(self.values.shape[1:-1])

    @property
    def upper(self) -> np.ndarray:
        return self.origin + self.spacing * (np.array(self.grid_shape) - 1)

    def shifted(self, shift) -> "DriftField":
        """The field ``y -> f(t, y + shift)`` (node grid moved by ``-shift``)."""
        c = np.atleast_1d(np.asarray(shift, dtype=np.float64))
        return DriftField(self.times, self.origin - c, self.spacing, self.values, alpha2=self.alpha2,
                          p2=self.p2, q2=self.q2, r2=self.r2, zero_extend=self.zero_extend)

    # evaluation ---------------------------------------------------------

    def _time_weights(self, t: np.ndarray):
        m = self.times.size
        if m == 1:
            zero = np.zeros(t.shape, dtype=np.int64)
            return zero, zero, np.zeros(t.shape)
        tc = np.clip(t, self.times[0], self.times[-1])
        k = np.clip(np.searchsorted(self.times, tc, side="right") - 1, 0, m - 2)
        lam = (tc - self.times[k]) / (self.times[k + 1] - self.times[k])
        return k, k + 1, lam

    def _interpolate(self, table: np.ndarray, t, points) -> tuple[np.ndarray, np.ndarray]:
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[None, :] if pts.size == self.dim else pts[:, None]
        n = pts.shape[0]
        tt = np.broadcast_to(np.asarray(t, dtype=np.float64), (n,))
        shape = np.array(self.grid_shape)
        u = (pts - self.origin) / self.spacing
        outside = np.any((u < 0) | (u > shape - 1), axis=1)
        if np.any(outside) and not self.zero_extend:
            i = int(np.flatnonzero(outside)[0])
            raise ValidationError(f"point {pts[i].tolist()} lies outside the drift grid")
        u = np.clip(u, 0.0, shape - 1)
        base = np.minimum(np.floor(u).astype(np.int64), shape - 2)
        frac = u - base
        k0, k1, lam = self._time_weights(tt)
        tail = table.shape[1 + self.dim:]
        out = np.zeros((n, *tail))
        for corner in range(1 << self.dim):
            w = np.ones(n)
            idx = []
            for axis in range(self.dim):
                up = (corner >> axis) & 1
                w = w * (frac[:, axis] if up else 1.0 - frac[:, axis])
                idx.append(base[:, axis] + up)
            v0 = table[(k0, *idx)]
            v1 = table[(k1, *idx)]
            lam_b = lam.reshape((n,) + (1,) * len(tail))
            w_b = w.reshape((n,) + (1,) * len(tail))
            out += w_b * ((1.0 - lam_b) * v0 + lam_b * v1)
        out[outside] = 0.0
        return out, outside

    def evaluate(self, t, points) -> np.ndarray:
        """``f(t_i, points_i)``; ``t`` is a scalar or one time per point."""
        return self._interpolate(self.values, t, points)[0]

    def outside_fraction(self, points) -> float:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        u = (pts - self.origin) / self.spacing
        return float(np.mean(np.any((u < 0) | (u > np.array(self.grid_shape) - 1), axis=1)))

    def jacobian(self, t, points) -> np.ndarray:
        """Spatial Jacobian ``(n, d_out, d_in)`` from central differences on the nodes."""
        if self._gradient is None:
            spatial = tuple(range(1, self.dim + 1))
            grads = np.gradient(self.values, *self.spacing, axis=spatial)
            if self.dim == 1:
                grads = [grads]
            self._gradient = np.stack(grads, axis=-1)
        return self._interpolate(self._gradient, t, points)[0]

    def measure_regularity(self) -> list[float]:
        """Besov norm at the declared indices of every slice and component."""
        from .norms.besov import BesovParams, besov_norm, _resolve_frequencies

        grid = GridSpec(tuple(self.origin - self.spacing / 2), tuple(self.spacing), self.grid_shape)
        try:
            blocks = len(_resolve_frequencies(grid, BesovParams(alpha=self.alpha2))) - 1
        except ValidationError:
            blocks = 3
        params = BesovParams(alpha=self.alpha2, p=self.p2, q=self.q2, blocks=max(3, blocks))
        out = []
        for k in range(self.times.size):
            for comp in range(self.dim):
                val = besov_norm(GridDensity(grid, self.values[k, ..., comp]), params)
                if not math.isfinite(val):
                    raise ValidationError(f"drift slice {k} component {comp} has an infinite Besov norm")
                out.append(val)
        return out


# ----------------------------------------------------------------------
# occupation pieces and the germ
# ----------------------------------------------------------------------


def _pieces(omega: SampledPath, s: np.ndarray, t: np.ndarray):
    """Overlaps of intervals [s_k, t_k] with the cells of ``omega``.

    Returns (interval index, cell index, weight) for every overlapping pair.
    """
    times = omega.times
    first = np.maximum(np.searchsorted(times, s, side="right") - 1, 0)
    last = np.minimum(np.searchsorted(times, t, side="left") - 1, times.size - 2)
    counts = np.maximum(last - first + 1, 0)
    owner = np.repeat(np.arange(s.size), counts)
    offsets = np.arange(owner.size) - np.repeat(np.cumsum(counts) - counts, counts)
    cell = first[owner] + offsets
    weight = np.minimum(times[cell + 1], t[owner]) - np.maximum(times[cell], s[owner])
    keep = weight > 0
    return owner[keep], cell[keep], weight[keep]


def _check_span(omega: SampledPath, a: float, b: float):
    lo, hi = omega.span
    if a < lo or b > hi:
        raise ValidationError(f"[{a}, {b}] is not inside the path span [{lo}, {hi}]")


class _Germ:
    """Evaluates ``chi`` on many intervals at once for a batch of anchor values."""

    def __init__(self, f: DriftField, omega: SampledPath, s: np.ndarray, t: np.ndarray, shift=None):
        if f.dim != omega.dim:
            raise ValidationError(f"drift has dimension {f.dim}, path has {omega.dim}")
        self.f, self.s, self.n = f, s, s.size
        self.owner, cell, self.weight = _pieces(omega, s, t)
        atoms = omega.values[cell]
        if shift is not None:
            atoms = atoms - np.asarray(shift, dtype=np.float64)
        self.atoms = atoms
        self.anchor_times = s[self.owner]

    def __call__(self, anchor: np.ndarray, times=None) -> np.ndarray:
        """``anchor`` has shape (batch, n, d); returns chi of shape (batch, n, d)."""
        batch, _, d = anchor.shape
        pts = anchor[:, self.owner, :] - self.atoms[None]
        tt = np.broadcast_to(self.anchor_times if times is None else times[self.owner], (batch, self.owner.size))
        vals = self.f.evaluate(tt.ravel(), pts.reshape(-1, d)).reshape(batch, -1, d)
        vals *= self.weight[None, :, None]
        out = np.zeros((batch, self.n, d))
        flat = (np.arange(batch)[:, None] * self.n + self.owner[None, :]).ravel()
        for comp in range(d):
            out[..., comp] = np.bincount(flat, weights=vals[..., comp].ravel(),
                                         minlength=batch * self.n).reshape(batch, self.n)
        return out

    def jacobian_sum(self, anchor: np.ndarray) -> np.ndarray:
        """``sum w grad f(s, anchor - a)`` per interval: (batch, n, d, d)."""
        batch, _, d = anchor.shape
        pts = anchor[:, self.owner, :] - self.atoms[None]
        tt = np.broadcast_to(self.anchor_times, (batch, self.owner.size))
        jac = self.f.jacobian(tt.ravel(), pts.reshape(-1, d)).reshape(batch, -1, d, d)
        jac *= self.weight[None, :, None, None]
        out = np.zeros((batch, self.n, d, d))
        flat = (np.arange(batch)[:, None] * self.n + self.owner[None, :]).ravel()
        for i in range(d):
            for j in range(d):
                out[..., i, j] = np.bincount(flat, weights=jac[..., i, j].ravel(),
                                             minlength=batch * self.n).reshape(batch, self.n)
        return out


def averaged_field(f: DriftField, mu, x, s: float) -> np.ndarray:
    """``sum_i w_i f(s, x - atom_i)``: the drift averaged along the occupation measure.

    ``x`` may be one point (d,) or a batch (n, d).
    """
    pts = np.asarray(x, dtype=np.float64)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if mu.dim != f.dim or pts.shape[1] != f.dim:
        raise ValidationError("drift, measure and point dimensions differ")
    out = np.zeros(pts.shape)
    if mu.size:
        for row, y in enumerate(pts):
            vals = f.evaluate(s, y[None, :] - mu.atoms)
            out[row] = np.array([math.fsum((mu.weights * vals[:, c]).tolist()) for c in range(f.dim)])
    return out[0] if single else out


# ----------------------------------------------------------------------
# the sewing lemma
# ----------------------------------------------------------------------


class SewingGerm:
    """A two-parameter germ ``chi(s, t)`` with its control.

    ``evaluate(s, t)`` takes arrays of interval endpoints and returns an
    array of shape (n, d).  The almost-additivity control is
    ``|delta chi_{sut}| <= C rho(s, u)^a sigma(u, t)^b`` with a + b > 1;
    ``rho`` and ``sigma`` default to interval lengths.  With ``check`` the
    control is spot-checked on random triples: the ratio of the defect to
    the control must not grow as the triples shrink.
    """

    def __init__(self, evaluate: Callable, a: float, b: float, rho: Callable | None = None,
                 sigma: Callable | None = None, span=(0.0, 1.0), check: bool = True, seed: int = 0):
        if not a + b > 1:
            raise ValidationError(f"control exponents need a + b > 1, got a + b = {a + b}")
        self.evaluate, self.a, self.b = evaluate, float(a), float(b)
        self.rho = rho or (lambda s, u: u - s)
        self.sigma = sigma or (lambda u, t: t - u)
        self.span = (float(span[0]), float(span[1]))
        self.spot_check = self.check_control(seed) if check else None
        if self.spot_check is not None and not self.spot_check["ok"]:
            raise ValidationError(
                f"germ defect outgrows its control: ratio {self.spot_check['small_scale_ratio']:.3g} at small "
                f"scales vs {self.spot_check['large_scale_ratio']:.3g} at large scales")

    def __call__(self, s, t) -> np.ndarray:
        out = np.asarray(self.evaluate(np.asarray(s, dtype=np.float64), np.asarray(t, dtype=np.float64)),
                         dtype=np.float64)
        return out.reshape(np.size(s), -1)

    def defect(self, s, u, t) -> np.ndarray:
        """``chi_st - chi_su - chi_ut``."""
        return self(s, t) - self(s, u) - self(u, t)

    def check_control(self, seed: int = 0, per_scale: int = 16) -> dict:
        rng = np.random.default_rng(seed)
        lo, hi = self.span
        ratios = []
        for scale in (2.0 ** -1, 2.0 ** -3, 2.0 ** -5, 2.0 ** -7):
            length = scale * (hi - lo)
            s = rng.uniform(lo, hi - length, per_scale)
            u = s + rng.uniform(0.2, 0.8, per_scale) * length
            t = s + length
            dfct = np.linalg.norm(self.defect(s, u, t), axis=1)
            ctrl = np.asarray(self.rho(s, u)) ** self.a * np.asarray(self.sigma(u, t)) ** self.b
            ratios.append(float(np.max(dfct / ctrl)))
        large = ratios[0]
        small = max(ratios[1:])
        ok = small <= 10.0 * max(large, 1e-300) or small < 1e-12
        return {"ok": bool(ok), "large_scale_ratio": large, "small_scale_ratio": small, "ratios": ratios}


@dataclass
class SewingResult:
    times: np.ndarray                       # finest grid
    values: np.ndarray                      # level-L sums on the finest grid, shape (n, d)
    differences: list                       # sup |I^(l) - I^(l-1)| on the level-(l-1) grid
    decay: list                             # successive difference ratios
    extrapolated_times: np.ndarray | None = None
    extrapolated: np.ndarray | None = None  # first-order Richardson limit on the level-(L-1) grid
    base: int = 2


def _level_sums(chi_of_grid: Callable, a: float, b: float, level: int, base: int):
    sums = []
    for lvl in range(level + 1):
        grid = np.linspace(a, b, base ** lvl + 1)
        chi = chi_of_grid(grid)
        sums.append((grid, np.vstack([np.zeros((1, chi.shape[1])), np.cumsum(chi, axis=0)])))
    return sums


def _differences(sums, base):
    diffs = []
    for (g0, v0), (g1, v1) in zip(sums, sums[1:]):
        diffs.append(float(np.max(np.abs(v1[::base] - v0))))
    decay = [d1 / d0 if d0 > 0 else 0.0 for d0, d1 in zip(diffs, diffs[1:])]
    return diffs, decay


def _diverging(diffs, decay, scale) -> bool:
    if len(decay) < 2:
        return False
    tiny = 1e-13 * max(scale, 1e-300)
    return diffs[-1] > tiny and all(r > 0.95 for r in decay[-2:])


def sewing_integrate(germ: SewingGerm, span=None, level: int = 10, base: int = 2,
                     raise_on_divergence: bool = True) -> SewingResult:
    """Compensated Riemann sums of ``germ`` on base-``base`` grids up to ``level``."""
    if base not in (2, 3):
        raise ValidationError("refinement base must be 2 or 3")
    if level < 1:
        raise ValidationError("level must be >= 1")
    a, b = germ.span if span is None else (float(span[0]), float(span[1]))
    sums = _level_sums(lambda g: germ(g[:-1], g[1:]), a, b, level, base)
    diffs, decay = _differences(sums, base)
    grid, values = sums[-1]
    scale = float(np.max(np.abs(values))) if values.size else 0.0
    if _diverging(diffs, decay, scale):
        # worst defect over the triples of the last refinement
        g = sums[-2][0]
        s, t = g[:-1], g[1:]
        u = s + (t - s) / base
        dfct = np.linalg.norm(germ.defect(s, u, t), axis=1)
        k = int(np.argmax(dfct))
        worst = (float(s[k]), float(u[k]), float(t[k]))
        msg = (f"dyadic differences do not decay (last ratios {decay[-2]:.3g}, {decay[-1]:.3g}); "
               f"worst triple (s, u, t) = {worst} with defect {dfct[k]:.3g}")
        if raise_on_divergence:
            raise DivergenceError(msg, worst)
    g_prev, v_prev = sums[-2]
    extrap = (base * values[::base] - v_prev) / (base - 1)
    return SewingResult(grid, values, diffs, decay, g_prev, extrap, base)


# ----------------------------------------------------------------------
# parameters and budget checks
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class YoungParams:
    """Regularity exponents of the driving path and the numerical controls.

    ``path_alpha, path_p, path_q``: the path's occupation measure is taken
    to be in ``C^{r1-var}(SBE^{path_alpha, path_p}_{path_q})``.  ``r2``
    defaults to the drift's declared time-variation exponent, ``r3`` is the
    variation exponent of the integrand path ``theta``.
    """

    path_alpha: float = 0.4
    path_p: float = 2.0
    path_q: float = 1.5
    r1: float = 1.5
    r2: float | None = None
    r3: float = 1.5
    gamma: float = 0.9
    level: int = 10
    tol: float = 1e-10
    max_iter: int = 200
    extrapolate: bool = True

    def __post_init__(self):
        if int(self.level) != self.level or not 1 <= self.level <= 24:
            raise ValidationError("level must be an integer in [1, 24]")
        if not self.tol > 0:
            raise ValidationError("tol must be positive")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValidationError("max_iter must be a positive integer")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class BudgetReport:
    gamma0: float
    slacks: dict
    unique: bool

    def to_dict(self) -> dict:
        return asdict(self)


def check_budget(params: YoungParams, f: DriftField, kind: str = "ode") -> BudgetReport:
    """Evaluate the exponent inequalities; raise :class:`BudgetError` on the first violation.

    ``kind='integral'`` checks the conditions for the integral alone
    (``1/r1 + gamma/r3 > 1`` in place of ``r1 < 1 + gamma``).
    """
    d = f.dim
    q1, p2 = params.path_q, f.p2
    a1, a2 = params.path_alpha, f.alpha2
    r1 = params.r1
    r2 = f.r2 if params.r2 is None else params.r2
    gamma = params.gamma
    inv = 1.0 / q1 + 1.0 / p2
    gamma0 = a1 + a2 - d * (inv - 1.0)
    checks = [
        ("1 < 1/q1 + 1/p2", inv - 1.0),
        ("1/q1 + 1/p2 < 1 + (alpha1 + alpha2)/d", 1.0 + (a1 + a2) / d - inv),
        ("1/r1 + 1/r2 > 1", 1.0 / r1 + 1.0 / r2 - 1.0),
        ("0 < gamma < 1", min(gamma, 1.0 - gamma)),
        ("gamma <= gamma0", gamma0 - gamma),
    ]
    if kind == "ode":
        checks.append(("r1 < 1 + gamma", 1.0 + gamma - r1))
    elif kind == "integral":
        checks.append(("1/r1 + gamma/r3 > 1", 1.0 / r1 + gamma / params.r3 - 1.0))
    else:
        raise ValidationError("kind must be 'ode' or 'integral'")
    slacks = {}
    for name, slack in checks:
        slacks[name] = float(slack)
        strict = name != "gamma <= gamma0"
        if slack < 0 or (strict and slack == 0):
            raise BudgetError(name, f"slack {slack:.6g} (alpha1={a1}, alpha2={a2}, q1={q1}, p2={p2}, "
                                    f"r1={r1}, r2={r2}, gamma={gamma}, gamma0={gamma0:.6g})")
    return BudgetReport(float(gamma0), slacks, bool(gamma0 > 1))


# ----------------------------------------------------------------------
# the Young integral
# ----------------------------------------------------------------------


@dataclass
class YoungResult:
    path: SampledPath
    differences: list
    decay: list
    budget: BudgetReport
    raw: SampledPath        # plain level-L sums

    def report(self) -> dict:
        return {"differences": self.differences, "decay": self.decay, "budget": self.budget.to_dict()}


def _dyadic_grid(a: float, b: float, level: int) -> np.ndarray:
    return np.linspace(a, b, 2 ** level + 1)


def young_integral(f: DriftField, theta: SampledPath, omega: SampledPath, params: YoungParams,
                   span=None) -> YoungResult:
    """``t -> int_a^t f(s, theta_s - omega_s) ds`` on the level-L dyadic grid.

    With ``params.extrapolate`` one more level is computed and the returned
    path is the first-order Richardson limit of the last two levels.
    """
    budget = check_budget(params, f, kind="integral")
    a, b = omega.span if span is None else (float(span[0]), float(span[1]))
    _check_span(omega, a, b)
    _check_span(theta, a, b)
    top = params.level + (1 if params.extrapolate else 0)

    def chi_of_grid(grid):
        germ = _Germ(f, omega, grid[:-1], grid[1:])
        return germ(theta.at(grid[:-1]).reshape(1, -1, f.dim))[0]

    sums = _level_sums(chi_of_grid, a, b, top, 2)
    diffs, decay = _differences(sums, 2)
    grid, values = sums[params.level]
    raw = SampledPath(grid, values)
    if params.extrapolate:
        fine = sums[-1][1]
        values = 2.0 * fine[::2] - values
    return YoungResult(SampledPath(grid, values), diffs, decay, budget, raw)


# ----------------------------------------------------------------------
# ODEs
# ----------------------------------------------------------------------


@dataclass
class OdeResult:
    solution: SampledPath          # x = theta - omega
    theta: SampledPath
    iterations: int
    changes: list                  # sup-norm change per Picard step
    ratios: list                   # successive contraction ratios
    budget: BudgetReport
    outside_fraction: float

    @property
    def converged(self) -> bool:
        return True

    def report(self) -> dict:
        return {"iterations": self.iterations, "changes": self.changes, "contraction_ratios": self.ratios,
                "gamma0": self.budget.gamma0, "unique": self.budget.unique,
                "budget_slacks": self.budget.slacks, "outside_fraction": self.outside_fraction}


def _picard(germ: _Germ, x0: np.ndarray, params: YoungParams, initial=None):
    """Fixed point of ``theta = x0 + cumulative sum of chi(theta at left points)``.

    ``x0`` has shape (batch, d); returns theta of shape (batch, n + 1, d).
    """
    batch, d = x0.shape
    n = germ.n
    theta = np.broadcast_to(x0[:, None, :], (batch, n + 1, d)).copy() if initial is None else initial.copy()
    changes, ratios = [], []
    for it in range(1, params.max_iter + 1):
        chi = germ(theta[:, :-1, :])
        new = np.empty_like(theta)
        new[:, 0] = x0
        new[:, 1:] = x0[:, None, :] + np.cumsum(chi, axis=1)
        change = float(np.max(np.abs(new - theta)))
        if changes and changes[-1] > 0:
            ratios.append(change / changes[-1])
        changes.append(change)
        theta = new
        if change < params.tol:
            return theta, it, changes, ratios
    raise ConvergenceError(
        f"Picard iteration did not reach tol={params.tol:g} in {params.max_iter} steps "
        f"(last change {changes[-1]:.3g})", {"changes": changes, "contraction_ratios": ratios})


def solve_ode(f: DriftField, omega: SampledPath, x0, params: YoungParams, span=None,
              initial: SampledPath | None = None) -> OdeResult:
    """Solve ``x_t = x0 - omega_t + int_a^t f(s, x_s) ds`` on the level-L dyadic grid.

    Iterates ``theta <- x0 + int f(s, theta_s - omega_s) ds`` from
    ``initial`` (default: the constant ``x0``) until the sup-norm change is
    below ``params.tol``.
    """
    budget = check_budget(params, f, kind="ode")
    a, b = omega.span if span is None else (float(span[0]), float(span[1]))
    _check_span(omega, a, b)
    x0 = np.atleast_1d(np.asarray(x0, dtype=np.float64))
    if x0.shape != (f.dim,):
        raise ValidationError(f"x0 must have dimension {f.dim}")
    grid = _dyadic_grid(a, b, params.level)
    germ = _Germ(f, omega, grid[:-1], grid[1:])
    init = None
    if initial is not None:
        init = initial.at(grid).reshape(1, grid.size, f.dim)
        init[:, 0] = x0
    theta, iters, changes, ratios = _picard(germ, x0[None, :], params, init)
    theta = theta[0]
    x = theta - omega.at(grid)
    outside = f.outside_fraction((theta[:-1][germ.owner] - germ.atoms))
    return OdeResult(SampledPath(grid, x), SampledPath(grid, theta), iters, changes, ratios, budget, outside)


# ----------------------------------------------------------------------
# flows
# ----------------------------------------------------------------------


@dataclass
class FlowResult:
    times: np.ndarray                  # global grid
    starts: np.ndarray                 # start times (grid points)
    points: np.ndarray                 # (n_x, d) initial points
    values: np.ndarray                 # (n_s, n_x, n_t, d); NaN before the start time
    iterations: list = field(default_factory=list)

    def at(self, s_index: int, x_index: int) -> SampledPath:
        row = self.values[s_index, x_index]
        keep = self.times >= self.starts[s_index]
        return SampledPath(self.times[keep], row[keep])

    def time_index(self, t: float) -> int:
        return _grid_index(self.times, t)


def _grid_index(grid: np.ndarray, t: float) -> int:
    k = int(np.argmin(np.abs(grid - t)))
    if abs(grid[k] - t) > 1e-12 * max(1.0, abs(t)):
        raise ValidationError(f"time {t} is not a point of the level grid")
    return k


class _FlowSolver:
    """Shared global grid and germ for all start points."""

    def __init__(self, f: DriftField, omega: SampledPath, params: YoungParams, span=None):
        self.budget = check_budget(params, f, kind="ode")
        a, b = omega.span if span is None else (float(span[0]), float(span[1]))
        _check_span(omega, a, b)
        self.f, self.omega, self.params = f, omega, params
        self.grid = _dyadic_grid(a, b, params.level)
        self.omega_grid = omega.at(self.grid)

    def solve_from(self, k: int, x0: np.ndarray):
        """theta and phi from grid index ``k`` for a batch of points (n, d)."""
        grid = self.grid[k:]
        shift = self.omega_grid[k]
        germ = _Germ(self.f, self.omega, grid[:-1], grid[1:], shift=shift)
        theta, iters, _, _ = _picard(germ, x0, self.params)
        phi = theta - (self.omega_grid[k:] - shift)[None]
        return theta, phi, iters, germ


def flow(f: DriftField, omega: SampledPath, s_grid: Sequence[float], x0_grid, params: YoungParams,
         span=None) -> FlowResult:
    """``phi(s, t, x0) = x0 - (omega_t - omega_s) + int_s^t f(r, phi(s, r, x0)) dr`` for all starts.

    All start times must be points of the global level-L dyadic grid.
    """
    solver = _FlowSolver(f, omega, params, span)
    pts = np.atleast_2d(np.asarray(x0_grid, dtype=np.float64))
    if pts.shape[1] != f.dim:
        pts = pts.reshape(-1, f.dim)
    starts = np.asarray(s_grid, dtype=np.float64).ravel()
    n_t = solver.grid.size
    values = np.full((starts.size, pts.shape[0], n_t, f.dim), np.nan)
    iters = []
    for i, s in enumerate(starts):
        k = _grid_index(solver.grid, s)
        _, phi, it, _ = solver.solve_from(k, pts)
        values[i, :, k:, :] = phi
        iters.append(it)
    res = FlowResult(solver.grid, starts, pts, values, iters)
    res._solver = solver  # noqa: SLF001 - reused by the composition and inverse checks
    return res


def check_composition(result: FlowResult, triples: Sequence[tuple] | None = None, tolerance=None) -> dict:
    """Compare ``phi(u, t, phi(s, u, x))`` with ``phi(s, t, x)``.

    ``triples`` lists (s, u, t) grid times; by default every pair of start
    times is combined with the final time.
    """
    solver = result._solver  # noqa: SLF001
    tol = 2.0 * solver.params.tol if tolerance is None else tolerance
    grid = solver.grid
    if triples is None:
        starts = sorted(result.starts.tolist())
        triples = [(s, u, grid[-1]) for i, s in enumerate(starts) for u in starts[i + 1:]]
    worst, flagged = 0.0, []
    for s, u, t in triples:
        ks, ku, kt = (_grid_index(grid, v) for v in (s, u, t))
        if not ks <= ku <= kt:
            raise ValidationError("composition triples need s <= u <= t")
        _, phi_s, _, _ = solver.solve_from(ks, result.points)
        mid = phi_s[:, ku - ks]
        _, phi_u, _, _ = solver.solve_from(ku, mid)
        err = np.max(np.abs(phi_u[:, kt - ku] - phi_s[:, kt - ks]), axis=1)
        worst = max(worst, float(err.max()))
        for j in np.flatnonzero(err > tol):
            flagged.append({"s": s, "u": u, "t": t, "x0": result.points[j].tolist(), "error": float(err[j])})
    return {"max_error": worst, "tolerance": tol, "flagged": flagged, "ok": not flagged}


def inverse_flow(f: DriftField, omega: SampledPath, s: float, t: float, y0, params: YoungParams,
                 span=None) -> np.ndarray:
    """``psi(s, t, y0)``: run the flow backwards from time t to time s.

    This is the time-reversed equation with driver ``r -> omega_{t+s-r}``.
    Its germ on a reversed step is anchored at the step's far end, so it
    reuses the forward occupation atoms and undoes the forward scheme up
    to the Picard tolerance.
    """
    solver = _FlowSolver(f, omega, params, span)
    grid = solver.grid
    ks, kt = _grid_index(grid, s), _grid_index(grid, t)
    pts = np.atleast_2d(np.asarray(y0, dtype=np.float64)).reshape(-1, f.dim)
    if kt == ks:
        return pts.copy()
    shift = solver.omega_grid[ks]
    sub = grid[ks:kt + 1]
    germ = _Germ(f, omega, sub[:-1], sub[1:], shift=shift)
    theta_end = pts + (solver.omega_grid[kt] - shift)
    # reversed time: theta_j = theta_{j+1} - chi_j(theta_j), solved jointly by Picard
    batch, d, n = pts.shape[0], f.dim, germ.n
    theta = np.broadcast_to(theta_end[:, None, :], (batch, n + 1, d)).copy()
    for _ in range(params.max_iter):
        chi = germ(theta[:, :-1, :])
        new = np.empty_like(theta)
        new[:, -1] = theta_end
        new[:, :-1] = theta_end[:, None, :] - np.cumsum(chi[:, ::-1, :], axis=1)[:, ::-1, :]
        change = float(np.max(np.abs(new - theta)))
        theta = new
        if change < params.tol:
            return theta[:, 0]  # at time s, theta = phi
    raise ConvergenceError(f"reversed Picard iteration did not reach tol={params.tol:g}", {})


def flow_jacobian(f: DriftField, omega: SampledPath, s: float, x0, params: YoungParams,
                  span=None) -> SampledPath:
    """``d phi(s, t, x0) / d x0`` along the grid, by the linearised germ.

    ``J_{j+1} = (I + sum_i w_i grad f(t_j, theta_j - a_i)) J_j`` with the
    spatial gradient taken from central differences of the drift nodes.
    Values are flattened row-major (d x d per time).
    """
    solver = _FlowSolver(f, omega, params, span)
    k = _grid_index(solver.grid, s)
    pts = np.atleast_1d(np.asarray(x0, dtype=np.float64)).reshape(1, f.dim)
    theta, _, _, germ = solver.solve_from(k, pts)
    steps = germ.jacobian_sum(theta[:, :-1, :])[0]
    d = f.dim
    jac = np.empty((germ.n + 1, d, d))
    jac[0] = np.eye(d)
    for j in range(germ.n):
        jac[j + 1] = (np.eye(d) + steps[j]) @ jac[j]
    return SampledPath(solver.grid[k:], jac.reshape(germ.n + 1, d * d))
