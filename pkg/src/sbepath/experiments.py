"""Monte Carlo and convergence studies.

Every experiment is a pure function of its arguments and seed; per-path
randomness comes from ``numpy.random.SeedSequence`` children, so results do
not depend on the number of worker threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import BudgetError, ComputationError, ValidationError
from .lnd import lnd_param_region
from .measures import GaussianMeasure, GridDensity, GridSpec, UniformMeasure
from .norms.besov import BesovParams, besov_norm, deposit_grid, density_on_grid
from .norms.regression import holder_exponent
from .norms.sbe import SbeParams, sbe_report
from .norms.variation import (
    dyadic_variation_bound,
    p_variation,
    p_variation_distances,
    variation_of_occupation,
)
from .occupation import OccupationMeasure, occupation, occupation_cells
from .paths import (
    BrownianMotion,
    FractionalBrownian,
    GaussianSpec,
    SampledPath,
    euler_maruyama_batch,
    gen_gaussian,
    path_rngs,
    perturb,
    reparametrize,
    uniform_times,
)
from .young import DriftField, YoungParams, solve_ode

__all__ = [
    "MomentScalingReport",
    "moment_target",
    "mc_moment_scaling",
    "sde_occupation_experiment",
    "reparam_experiment",
    "shift_experiment",
    "shift_family",
    "besov_sbe_family",
    "dyadic_consistency",
    "band_limited_drift",
    "regularization_demo",
    "path_scale_params",
]


# ----------------------------------------------------------------------
# helpers
# ----------------------------------------------------------------------


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _child_seeds(seed: int, count: int) -> list[int]:
    return [int(c.generate_state(1)[0]) for c in np.random.SeedSequence(int(seed)).spawn(count)]


def _map(func, items, workers: int):
    if workers is None or workers <= 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


def path_scale_params(path: SampledPath, alpha: float, p: float = 2.0, q: float = 2.0,
                      far_field: bool = True) -> SbeParams:
    """SBE parameters whose inner radius is twice the path's median step.

    Below that radius the left-endpoint atomic measure of a sampled path
    no longer resembles the occupation of the continuous path, so small-ball
    increments there measure the sampling rather than the path.
    """
    step = occupation(path, *path.span).median_step()
    if not step > 0:
        raise ValidationError("the path is constant; no spatial scale to anchor r_min")
    return SbeParams(alpha=alpha, p=p, q=q, r_min=2.0 * step, far_field=far_field)


def _check_spans(spans: Sequence[float]) -> np.ndarray:
    s = np.asarray(list(spans), dtype=np.float64)
    if s.size == 0:
        raise ValidationError("span list is empty")
    if s.size < 3:
        raise ValidationError("need at least 3 spans for a slope fit")
    for v in s:
        if not 0 < v <= 1:
            raise ValidationError(f"span {v} is not in (0, 1]")
        j = -math.log2(v)
        if abs(j - round(j)) > 1e-12:
            raise ValidationError(f"span {v} is not dyadic")
    if np.unique(s).size != s.size:
        raise ValidationError("spans must be distinct")
    return np.sort(s)


# ----------------------------------------------------------------------
# moment scaling
# ----------------------------------------------------------------------


def moment_target(alpha: float, hurst: float, d: int, margin: float = 0.05) -> tuple[float, float]:
    """``(beta, delta0)`` with ``beta = 1/H - d - margin``, ``delta0 = (beta - 2 alpha)/(beta + 2d)``."""
    beta = 1.0 / hurst - d - margin
    return beta, (beta - 2.0 * alpha) / (beta + 2.0 * d)


@dataclass
class MomentScalingReport:
    process: str
    alpha: float
    p: float
    q: float
    m: int
    d: int
    beta: float
    delta0: float
    spans: list
    means: list
    std_errors: list
    slope: float
    ci: tuple
    n_paths: int
    n_steps: int
    seed: int
    bootstrap: int
    truncation: dict = field(default_factory=dict)
    per_path: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        # (beta + 2d)(1 - delta0) = 2(alpha + d)
        lhs = (self.beta + 2 * self.d) * (1 - self.delta0)
        rhs = 2 * (self.alpha + self.d)
        if abs(lhs - rhs) > 1e-12 * max(1.0, abs(rhs)):
            raise ComputationError(f"delta0 inconsistent: {lhs} != {rhs}")

    @property
    def target(self) -> float:
        return 1.0 + self.delta0

    def to_dict(self, include_paths: bool = False) -> dict:
        out = asdict(self)
        out["target"] = self.target
        if not include_paths:
            out.pop("per_path")
        return _jsonable(out)


def _bootstrap_slope(rows: np.ndarray, spans: np.ndarray, resamples: int, rng: np.random.Generator):
    n = rows.shape[0]
    logs = np.log(spans)
    idx = rng.integers(0, n, size=(resamples, n))
    means = rows[idx].mean(axis=1)                       # (resamples, n_spans)
    if np.any(means <= 0):
        raise ComputationError("a bootstrap resample has a non-positive mean moment")
    centred = logs - logs.mean()
    slopes = (np.log(means) - np.log(means).mean(axis=1, keepdims=True)) @ centred / (centred @ centred)
    lo, hi = np.percentile(slopes, [2.5, 97.5])
    return float(lo), float(hi)


def _path_moments(path: SampledPath, spans: np.ndarray, alpha: float, p: float, q: float,
                  truncation_levels: Sequence[float]) -> dict:
    params = path_scale_params(path, alpha, p, q, far_field=True)
    a = path.span[0]
    sup = float(np.max(np.linalg.norm(path.values, axis=1)))
    weight = (1.0 + sup) ** (-path.dim)
    norms = np.array([sbe_report(occupation(path, a, a + s), params).value for s in spans])
    return {"squared": norms ** 2, "weight": weight, "sup": sup}


def _moment_report(moments: list[dict], spans, alpha, p, q, d, hurst, name, n_paths, n_steps, seed,
                   bootstrap, truncation_levels, max_ci_width) -> MomentScalingReport:
    sq = np.array([m["squared"] for m in moments])
    w = np.array([m["weight"] for m in moments])
    sups = np.array([m["sup"] for m in moments])
    rows = sq * w[:, None]
    means = rows.mean(axis=0)
    se = rows.std(axis=0, ddof=1) / math.sqrt(rows.shape[0])
    fit = holder_exponent(spans, means)
    lo, hi = _bootstrap_slope(rows, spans, bootstrap, np.random.default_rng([int(seed), 1]))
    if max_ci_width is not None and hi - lo > max_ci_width:
        raise ComputationError(f"bootstrap CI width {hi - lo:.3g} exceeds {max_ci_width}: "
                               f"{n_paths} paths are insufficient")
    beta, delta0 = moment_target(alpha, hurst, d)
    trunc = {}
    for M in truncation_levels:
        keep = sups <= M
        trunc[str(M)] = {"fraction": float(keep.mean()),
                         "unweighted_means": (sq * keep[:, None]).mean(axis=0).tolist()}
    return MomentScalingReport(name, alpha, p, q, 1, d, beta, delta0, spans.tolist(), means.tolist(),
                               se.tolist(), fit.slope, (lo, hi), n_paths, n_steps, int(seed), bootstrap,
                               trunc, rows.tolist())


def _admissible(alpha: float, hurst: float, d: int):
    beta, _ = moment_target(alpha, hurst, d)
    if not alpha > 0:
        raise ValidationError("alpha must be positive")
    if abs(2 * alpha - round(2 * alpha)) < 1e-12:
        raise ValidationError(f"2 alpha = {2 * alpha} is an integer; choose a non-integer value")
    if not alpha < beta / 2:
        raise ValidationError(f"alpha = {alpha} must be below beta/2 = {beta / 2:.4g}")


def mc_moment_scaling(spec: GaussianSpec, alpha: float, spans: Sequence[float], n_paths: int,
                      n_steps: int, seed: int, *, p: float = 2.0, q: float = 2.0, bootstrap: int = 1000,
                      max_ci_width: float | None = None, truncation_levels=(1.0, 2.0, 4.0),
                      workers: int = 1) -> MomentScalingReport:
    """Weighted second moments of ``||mu_{0,s}||_SBE`` against the span s.

    Each path is sampled on ``n_steps`` uniform steps over [0, 1]; the
    moment at span s is the mean over paths of
    ``||mu_{0,s}||^2 (1 + sup|omega|)^{-d}``.  The slope of the log-log fit
    comes with a percentile bootstrap interval over paths.
    """
    spans = _check_spans(spans)
    hurst = spec.hurst
    _admissible(alpha, hurst, spec.dim)
    if n_paths < 10:
        raise ValidationError(f"{n_paths} paths are insufficient for a bootstrap interval (need >= 10)")
    seeds = _child_seeds(seed, n_paths)

    def one(s):
        path = gen_gaussian(spec, int(n_steps) + 1, (0.0, 1.0), s)
        return _path_moments(path, spans, alpha, p, q, truncation_levels)

    moments = _map(one, seeds, workers)
    name = type(spec.kind).__name__ + (f"(H={hurst})" if isinstance(spec.kind, FractionalBrownian) else "")
    return _moment_report(moments, spans, alpha, p, q, spec.dim, hurst, name, n_paths, n_steps, seed,
                          bootstrap, truncation_levels, max_ci_width)


def sde_occupation_experiment(b: Callable | None, n_paths: int, spans: Sequence[float], alpha: float,
                              seed: int, *, sigma: float = 1.0, n_steps: int = 2 ** 14, x0: float = 0.0,
                              bootstrap: int = 1000, dilation: float = 2.0, workers: int = 1) -> dict:
    """Occupation moments of ``dX = b(t, X) dt + sigma dW`` against the Brownian baseline.

    The baseline uses the same noise with ``b = 0`` and ``sigma = 1``.  The
    dilation check reruns the same noise with ``sigma * dilation`` and
    compares the ``SBE^{alpha,2}_1`` norms of the whole-span measures, whose
    ratio should be ``dilation^{-alpha}`` when ``b = 0``.
    """
    spans = _check_spans(spans)
    _admissible(alpha, 0.5, 1)
    if n_paths < 10:
        raise ValidationError(f"{n_paths} paths are insufficient for a bootstrap interval (need >= 10)")
    drift = b if b is not None else (lambda t, x: 0.0)
    span = (0.0, 1.0)
    n = int(n_steps) + 1

    def batch(bfun, sig):
        times, vals = euler_maruyama_batch(bfun, lambda t, x: sig, x0, n, span, path_rngs(seed, n_paths))
        return [SampledPath(times, v) for v in vals]

    def moments(paths):
        return _map(lambda pth: _path_moments(pth, spans, alpha, 2.0, 2.0, (1.0, 2.0, 4.0)), paths, workers)

    sde_paths = batch(drift, sigma)
    base_paths = batch(lambda t, x: 0.0, 1.0)
    sde = _moment_report(moments(sde_paths), spans, alpha, 2.0, 2.0, 1, 0.5, "sde", n_paths, n_steps,
                         seed, bootstrap, (1.0, 2.0, 4.0), None)
    base = _moment_report(moments(base_paths), spans, alpha, 2.0, 2.0, 1, 0.5, "BrownianMotion", n_paths,
                          n_steps, seed, bootstrap, (1.0, 2.0, 4.0), None)
    overlap = not (sde.ci[1] < base.ci[0] or base.ci[1] < sde.ci[0])

    scaled = batch(drift, sigma * dilation)
    ratios = []
    for pth, big in zip(sde_paths, scaled):
        small_norm = sbe_report(occupation(pth, *span), path_scale_params(pth, alpha, 2.0, 1.0)).value
        big_norm = sbe_report(occupation(big, *span), path_scale_params(big, alpha, 2.0, 1.0)).value
        ratios.append(big_norm / small_norm)
    return _jsonable({
        "sde": sde.to_dict(),
        "baseline": base.to_dict(),
        "ci_overlap": overlap,
        "dilation": {"factor": dilation, "expected_ratio": dilation ** (-alpha),
                     "mean_ratio": float(np.mean(ratios)), "ratios": ratios},
    })


# ----------------------------------------------------------------------
# reparametrisation and perturbation
# ----------------------------------------------------------------------


def reparam_experiment(path: SampledPath, phi: SampledPath, r: float, sbe: SbeParams,
                       n_points: int = 17) -> dict:
    """V^r(SBE) of ``mu_{a,.}`` before and after the time change ``phi``.

    Partition points are uniform in phi's domain and mapped through phi for
    the original path, so both variations range over matching partitions.
    """
    new = reparametrize(path, phi)
    u = np.linspace(*phi.span, int(n_points))
    t = phi.at(u)[:, 0]
    t[0], t[-1] = path.span
    v_orig = variation_of_occupation(path, t[0], t, r, sbe)
    v_new = variation_of_occupation(new, u[0], u, r, sbe)
    return _jsonable({"original": v_orig, "transformed": v_new, "ratio": v_new / v_orig,
                      "partition": u.tolist(), "r": r, "sbe": sbe.to_dict()})


def _cell_deposits(path: SampledPath, bounds: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Prefix sums over partition cells of the deposited occupation densities."""
    out = np.zeros((bounds.size,) + grid.shape)
    for k, (s, t) in enumerate(zip(bounds[:-1], bounds[1:])):
        out[k + 1] = out[k] + deposit_grid(occupation(path, s, t), grid).values
    return out


def _besov_variation(prefix: np.ndarray, grid: GridSpec, params: BesovParams, r: float) -> float:
    n = prefix.shape[0]
    dist = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            dist[i, j] = besov_norm(GridDensity(grid, prefix[j] - prefix[i]), params)
    return p_variation_distances(dist, r).value


def shift_experiment(path: SampledPath, f: SampledPath, g: SampledPath, r: float, gamma: float,
                     besov: BesovParams, *, r1: float = 1.0, n_points: int = 17,
                     spacing: float | None = None) -> dict:
    """Besov-valued variation of ``mu^f - mu^g`` against its perturbation bound.

    ``bound_ratio`` is ``||mu^f - mu^g||_{V^r(B^{alpha-gamma-1})}`` divided by
    ``||mu||_{V^r(B^alpha)} (||f - g||_{V^{r1}} + (1 + ||g||_{V^{r1}}) ||f - g||_inf)``.
    All three measures are deposited on one common grid.
    """
    pf, pg = perturb(path, f), perturb(path, g)
    a, b = path.span
    bounds = np.linspace(a, b, int(n_points))
    if spacing is None:
        spacing = 0.5 * occupation(path, a, b).median_step()
        if not spacing > 0:
            raise ValidationError("cannot infer a grid spacing from a constant path")
    lo = np.min([p.values.min(axis=0) for p in (path, pf, pg)], axis=0)
    hi = np.max([p.values.max(axis=0) for p in (path, pf, pg)], axis=0)
    grid = GridSpec.covering(lo, hi, spacing, pad=4 * spacing)
    low = replace(besov, alpha=besov.alpha - gamma - 1.0)
    base = _cell_deposits(path, bounds, grid)
    diff = _cell_deposits(pf, bounds, grid) - _cell_deposits(pg, bounds, grid)
    lhs = _besov_variation(diff, grid, low, r)
    mu_norm = _besov_variation(base, grid, besov, r)
    dfg = SampledPath(path.times, f.at(path.times) - g.at(path.times))
    gp = SampledPath(path.times, g.at(path.times))
    var_fg = p_variation(dfg.values, r1)
    var_g = p_variation(gp.values, r1)
    sup_fg = dfg.sup_norm()
    denom = mu_norm * (var_fg + (1.0 + var_g) * sup_fg)
    ratio = lhs / denom if denom > 0 else (0.0 if lhs == 0 else math.inf)
    return _jsonable({"difference_norm": lhs, "mu_norm": mu_norm, "f_minus_g_variation": var_fg,
                      "g_variation": var_g, "f_minus_g_sup": sup_fg, "bound_ratio": ratio,
                      "r": r, "r1": r1, "gamma": gamma, "grid_spacing": spacing})


def _smooth_perturbation(times: np.ndarray, rng: np.random.Generator, d: int, modes: int = 4,
                         scale: float = 0.1) -> SampledPath:
    a, b = times[0], times[-1]
    u = (times - a) / (b - a)
    vals = np.zeros((times.size, d))
    for k in range(1, modes + 1):
        vals += np.outer(np.sin(k * np.pi * u), rng.normal(size=d)) * scale / k
    return SampledPath(times, vals)


def shift_family(path: SampledPath, n_pairs: int = 10, seed: int = 0, *, r: float = 2.0,
                 gamma: float = 1.0, besov: BesovParams | None = None, n_points: int = 9) -> dict:
    """Bound ratios of :func:`shift_experiment` over random smooth (f, g) pairs."""
    besov = besov or BesovParams(alpha=0.2, p=2, q=2)
    rng = np.random.default_rng(seed)
    ratios = []
    for _ in range(int(n_pairs)):
        f = _smooth_perturbation(path.times, rng, path.dim)
        g = _smooth_perturbation(path.times, rng, path.dim)
        ratios.append(shift_experiment(path, f, g, r, gamma, besov, n_points=n_points)["bound_ratio"])
    ratios = np.array(ratios)
    return _jsonable({"ratios": ratios, "spread": float(ratios.max() / ratios.min()),
                      "n_pairs": int(n_pairs), "seed": seed})


# ----------------------------------------------------------------------
# Besov-SBE comparison
# ----------------------------------------------------------------------


def besov_sbe_family(alpha: float = 0.3, p: float = 2.0, q: float = 2.0, seed: int = 0,
                     n_steps: int = 2 ** 12) -> dict:
    """Besov and SBE norms of six test measures.

    Two Gaussians, two uniform laws and the occupation measures of two
    Brownian paths.  The constant ``C = besov / sbe`` is fitted on the first
    member; ``worst_factor`` is the largest deviation of any member's ratio
    from C, in either direction.
    """
    members = []
    for sigma in (0.25, 1.0):
        mu = GaussianMeasure((0.0,), sigma)
        h = sigma / 64
        grid = GridSpec.covering([-10 * sigma], [10 * sigma], h)
        members.append((f"gaussian(sigma={sigma})", mu, SbeParams(alpha=alpha, p=p, q=q, far_field=True),
                        density_on_grid(mu, grid)))
    for width in (0.5, 2.0):
        mu = UniformMeasure(-width / 2, width / 2)
        h = width / 512
        grid = GridSpec.covering([-width], [width], h)
        members.append((f"uniform(width={width})", mu, SbeParams(alpha=alpha, p=p, q=q, far_field=True),
                        density_on_grid(mu, grid)))
    for k, s in enumerate(_child_seeds(seed, 2)):
        path = gen_gaussian(GaussianSpec(BrownianMotion()), n_steps + 1, (0.0, 1.0), s)
        mu = occupation(path, 0.0, 1.0)
        params = path_scale_params(path, alpha, p, q, far_field=True)
        # keep the top Besov frequency below the scale where atoms show through
        h = params.r_min / 4
        lo, hi = mu.support_box()
        grid = GridSpec.covering(lo, hi, h, pad=1.0)
        members.append((f"bm_occupation({k})", mu, params, deposit_grid(mu, grid)))
    rows = []
    for name, mu, sp, dens in members:
        sbe = sbe_report(mu, sp).value
        bes = besov_norm(dens, BesovParams(alpha=alpha, p=p, q=q))
        rows.append({"name": name, "sbe": sbe, "besov": bes, "ratio": bes / sbe})
    c = rows[0]["ratio"]
    worst = max(max(r["ratio"] / c, c / r["ratio"]) for r in rows)
    return _jsonable({"alpha": alpha, "p": p, "q": q, "constant": c, "members": rows,
                      "worst_factor": worst})


# ----------------------------------------------------------------------
# dyadic variation estimator vs exact variation
# ----------------------------------------------------------------------


def dyadic_consistency(path: SampledPath, r: float = 2.0, alpha: float = 0.4, levels: int = 6,
                       epsilon: float = 0.5) -> dict:
    """Dyadic-increment bound against the exact r-variation of ``t -> mu_{a,t}``.

    Both use the SBE distances between the ``2^levels + 1`` dyadic points of
    the path span.  The bound must dominate the exact r-th power.
    """
    a, b = path.span
    pts = np.linspace(a, b, 2 ** levels + 1)
    params = path_scale_params(path, alpha, 2.0, 2.0, far_field=True)
    n = pts.size
    dist = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            dist[i, j] = sbe_report(occupation(path, pts[i], pts[j]), params).value
    exact = p_variation_distances(dist, r)
    level_norms = []
    for lvl in range(levels + 1):
        stride = (n - 1) >> lvl
        idx = np.arange(0, n, stride)
        level_norms.append(dist[idx[:-1], idx[1:]])
    bound = dyadic_variation_bound(level_norms, r, epsilon)
    return _jsonable({"exact_power": exact.power, "bound": bound.bound, "raw": bound.raw,
                      "constant": bound.constant, "dominates": bool(bound.bound >= exact.power),
                      "slack_factor": bound.bound / exact.power if exact.power > 0 else math.inf})


# ----------------------------------------------------------------------
# regularisation by a rough path
# ----------------------------------------------------------------------


def band_limited_drift(d: int, alpha2: float, modes: int, radius: float, nodes: int, seed: int,
                       p2: float = 2.0) -> DriftField:
    """Random time-independent drift with spectrum ``|k|^{-(alpha2 + d/2)}`` up to ``modes``.

    The field is a real Fourier series on the box ``[-radius, radius]^d``,
    scaled to sup-norm 1 and tapered to zero near the box edges so that
    zero extension outside the grid is continuous.
    """
    rng = np.random.default_rng(seed)
    axes = [np.linspace(-radius, radius, nodes)] * d
    mesh = np.meshgrid(*axes, indexing="ij")
    ks = np.array(np.meshgrid(*[np.arange(-modes, modes + 1)] * d, indexing="ij")).reshape(d, -1).T
    ks = ks[np.any(ks != 0, axis=1)]
    amp = np.linalg.norm(ks, axis=1) ** (-(alpha2 + d / 2.0))
    phase = sum(m[..., None] * k for m, k in zip(mesh, ks.T)) * (np.pi / radius)
    taper = np.ones(mesh[0].shape)
    for m in mesh:
        x = np.clip((radius - np.abs(m)) / (0.15 * radius), 0.0, 1.0)
        taper *= np.sin(0.5 * np.pi * x) ** 2
    values = np.empty(mesh[0].shape + (d,))
    for comp in range(d):
        c = rng.normal(size=ks.shape[0]) * amp
        s = rng.normal(size=ks.shape[0]) * amp
        field_ = np.cos(phase) @ c + np.sin(phase) @ s
        values[..., comp] = field_ * taper
    values /= max(np.max(np.abs(values)), 1e-300)
    h = 2 * radius / (nodes - 1)
    return DriftField([0.0], [-radius] * d, [h] * d, values[None], alpha2=alpha2, p2=p2, r2=1.0)


def _path_exponents(H: float, d: int, q1: float = 1.5, p1: float = 2.0, shrink: float = 0.9) -> dict:
    conj = q1 / (q1 - 1.0)
    alpha_max = min(1.0 / (2 * H) - d / 2.0, (1.0 / H - d) * min(0.5, 1.0 / conj))
    if not alpha_max > 0:
        raise ValidationError(f"no admissible path regularity for H={H}, d={d}")
    alpha1 = shrink * alpha_max
    region = lnd_param_region(H, d, alpha1, p1, q1)
    return {"alpha1": alpha1, "p1": p1, "q1": q1, "region": region.to_dict()}


def regularization_demo(H: float = 0.3, d: int = 1, alpha2: float = 1.0, roughness: int = 8,
                        n_grid: int = 2 ** 12, seed: int = 0, *, levels: Sequence[int] = (6, 7, 8, 9, 10),
                        zero_drift: bool = False, x0=None, tol: float = 1e-10) -> dict:
    """Solve ``x = x0 - omega + int f(x)`` for an fBm path and a random drift.

    Reports the self-convergence of the solution over dyadic levels and the
    Picard contraction history at the finest level.  A budget violation is
    reported with the name of the failing inequality instead of a solution.
    """
    if not 0 < H < 1.0 / d:
        raise ValidationError(f"need 0 < H < 1/d, got H={H}, d={d}")
    seeds = _child_seeds(seed, 2)
    path = gen_gaussian(GaussianSpec(FractionalBrownian(H), d), int(n_grid) + 1, (0.0, 1.0), seeds[0])
    expo = _path_exponents(H, d)
    radius = 2.0 + 2.0 * float(np.max(np.abs(path.values)))
    nodes = 1025 if d == 1 else 129
    drift = band_limited_drift(d, alpha2, roughness, radius, nodes, seeds[1])
    if zero_drift:
        drift = DriftField(drift.times, drift.origin, drift.spacing, np.zeros_like(drift.values),
                           alpha2=alpha2, p2=drift.p2, r2=drift.r2)
    inv = 1.0 / expo["q1"] + 1.0 / drift.p2
    gamma0 = expo["alpha1"] + alpha2 - d * (inv - 1.0)
    gamma = min(0.95, gamma0) if gamma0 > 0 else 0.5
    r1 = 1.0 + gamma / 2.0
    start = np.zeros(d) if x0 is None else np.atleast_1d(np.asarray(x0, dtype=np.float64))
    base = dict(path_alpha=expo["alpha1"], path_p=expo["p1"], path_q=expo["q1"], r1=r1, r2=1.0, r3=r1,
                gamma=gamma, tol=tol, max_iter=500)
    out = {"H": H, "d": d, "alpha2": alpha2, "roughness": roughness, "n_grid": n_grid, "seed": seed,
           "path_exponents": expo, "gamma0": gamma0}
    sols = {}
    try:
        for lvl in levels:
            sols[lvl] = solve_ode(drift, path, start, YoungParams(level=int(lvl), **base))
    except BudgetError as exc:
        out.update({"status": "budget_violation", "inequality": exc.inequality, "message": str(exc)})
        return _jsonable(out)
    diffs = []
    lv = sorted(sols)
    for lo_, hi_ in zip(lv, lv[1:]):
        coarse, fine = sols[lo_].solution.values, sols[hi_].solution.values
        diffs.append(float(np.max(np.abs(fine[::2 ** (hi_ - lo_)] - coarse))))
    rates = [math.log2(a / b) if a > 0 and b > 0 else None for a, b in zip(diffs, diffs[1:])]
    finest = sols[lv[-1]]
    exact_err = None
    if zero_drift:
        exact_err = [float(np.max(np.abs(s.solution.values - (start - path.at(s.solution.times)))))
                     for s in sols.values()]
    out.update({"status": "ok", "levels": lv, "self_differences": diffs, "rates": rates,
                "finest": finest.report(), "zero_drift_errors": exact_err,
                "measured_drift_regularity": max(drift.measure_regularity())})
    return _jsonable(out)
