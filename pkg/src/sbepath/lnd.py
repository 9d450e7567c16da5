"""Local non-determinism diagnostics for Gaussian increment models.

A model is described by the covariance of its increments,
``Cov(w_{ab}, w_{cd})`` for one coordinate; the ``dim`` coordinates are
independent copies.  Closed forms are used where they exist so that, for
instance, Brownian increments over disjoint intervals have covariance
exactly 0.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import hermite_e
from scipy import integrate, linalg, optimize

from .errors import ComputationError, ValidationError
from .norms.regression import holder_exponent
from .paths import BrownianMotion, FractionalBrownian, GaussianSpec

__all__ = [
    "GaussianIncrementModel",
    "increment_lower_bound",
    "lnd_ratio",
    "lnd_min_ratio",
    "hermite_peak",
    "gaussian_increment_cbeta",
    "cnu_linearity",
    "lnd_param_region",
]


def _bm_increment(a, b, c, d):
    return np.maximum(0.0, np.minimum(b, d) - np.maximum(a, c))


def _fbm_increment(hurst: float):
    h2 = 2.0 * hurst

    def cov(a, b, c, d):
        return 0.5 * (np.abs(d - a) ** h2 + np.abs(c - b) ** h2 - np.abs(d - b) ** h2 - np.abs(c - a) ** h2)

    return cov


def _from_covariance(R: Callable):
    def cov(a, b, c, d):
        return R(b, d) - R(b, c) - R(a, d) + R(a, c)

    return cov


@dataclass(frozen=True)
class GaussianIncrementModel:
    """Centred Gaussian model with isotropic, independent coordinates.

    ``increment_cov(a, b, c, d)`` returns ``Cov(w_b - w_a, w_d - w_c)`` for
    one coordinate; ``hurst`` is the nominal exponent the diagnostics are
    measured against.
    """

    increment_cov: Callable
    hurst: float
    dim: int = 1
    name: str = "custom"

    def __post_init__(self):
        if not 0 < self.hurst < 1:
            raise ValidationError(f"Hurst exponent must lie in (0, 1), got {self.hurst}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValidationError("dimension must be a positive integer")

    @classmethod
    def brownian(cls, dim: int = 1) -> "GaussianIncrementModel":
        return cls(_bm_increment, 0.5, dim, "bm")

    @classmethod
    def fbm(cls, hurst: float, dim: int = 1) -> "GaussianIncrementModel":
        FractionalBrownian(hurst)  # validates the index
        return cls(_fbm_increment(hurst), hurst, dim, f"fbm(H={hurst})")

    @classmethod
    def ornstein_uhlenbeck(cls, dim: int = 1, hurst: float = 0.5) -> "GaussianIncrementModel":
        """Stationary unit-rate OU process, covariance exp(-|t - s|)."""
        return cls(_from_covariance(lambda s, t: np.exp(-np.abs(t - s))), hurst, dim, "ou")

    @classmethod
    def from_covariance(cls, R: Callable, hurst: float, dim: int = 1) -> "GaussianIncrementModel":
        return cls(_from_covariance(R), hurst, dim, "custom")

    @classmethod
    def from_spec(cls, spec: GaussianSpec, hurst: float | None = None) -> "GaussianIncrementModel":
        kind = spec.kind
        if isinstance(kind, BrownianMotion) and hurst in (None, 0.5):
            return cls.brownian(spec.dim)
        if isinstance(kind, FractionalBrownian) and hurst in (None, kind.hurst):
            return cls.fbm(kind.hurst, spec.dim)
        if hurst is None:
            raise ValidationError("a nominal Hurst exponent is required for this covariance")
        return cls.from_covariance(spec.covariance, hurst, spec.dim)

    def variance(self, s, t):
        """Per-coordinate increment variance V(s, t)."""
        return self.increment_cov(s, t, s, t)

    def increment_matrix(self, times: Sequence[float]) -> np.ndarray:
        """Covariance of consecutive increments over ``times``."""
        t = np.asarray(times, dtype=np.float64)
        a, b = t[:-1], t[1:]
        return np.asarray(self.increment_cov(a[:, None], b[:, None], a[None, :], b[None, :]), dtype=np.float64)


# ----------------------------------------------------------------------
# covariance lower bounds and the LND ratio
# ----------------------------------------------------------------------


@dataclass
class LowerBound:
    min_ratio: float
    argmin: tuple
    n_pairs: int

    def to_dict(self) -> dict:
        return asdict(self)


def increment_lower_bound(model: GaussianIncrementModel, probe_times: Sequence[float]) -> LowerBound:
    """``min V(s, t) / |t - s|^{2H}`` over distinct probe pairs."""
    t = np.unique(np.asarray(probe_times, dtype=np.float64))
    if t.size < 2:
        raise ValidationError("need at least two distinct probe times")
    s_idx, t_idx = np.triu_indices(t.size, 1)
    s, u = t[s_idx], t[t_idx]
    var = np.asarray(model.variance(s, u), dtype=np.float64)
    if np.any(var < 0):
        k = int(np.argmin(var))
        raise ValidationError(f"negative increment variance {var[k]:.3e} at ({s[k]!r}, {u[k]!r})")
    ratio = var / (u - s) ** (2 * model.hurst)
    k = int(np.argmin(ratio))
    return LowerBound(float(ratio[k]), (float(s[k]), float(u[k])), int(ratio.size))


def lnd_ratio(model: GaussianIncrementModel, times: Sequence[float], vectors) -> float:
    """``Var(sum_k x_k . w_{s_k s_{k+1}}) / sum_k |x_k|^2 |s_{k+1} - s_k|^{2H}``.

    The variance is the exact bilinear form ``sum_{k,l} (x_k . x_l) C_kl``.
    """
    t = np.asarray(times, dtype=np.float64)
    x = np.asarray(vectors, dtype=np.float64)
    if t.ndim != 1 or t.size < 2:
        raise ValidationError("need at least two times")
    if np.any(np.diff(t) <= 0):
        raise ValidationError("times must be strictly increasing")
    if x.ndim == 1:
        x = x[:, None] if model.dim == 1 and x.size == t.size - 1 else x[None, :]
    if x.shape != (t.size - 1, model.dim):
        raise ValidationError(f"vectors must have shape ({t.size - 1}, {model.dim})")
    gram = x @ x.T
    if not np.any(np.diag(gram) > 0):
        raise ValidationError("all vectors are zero; the ratio is undefined")
    cov = model.increment_matrix(t)
    var = math.fsum((gram * cov).ravel().tolist())
    if var < 0:
        raise ComputationError(f"negative variance {var:.3e}: the covariance is not positive semidefinite")
    denom = math.fsum((np.diag(gram) * np.diff(t) ** (2 * model.hurst)).tolist())
    return var / denom


@dataclass
class LndReport:
    n: int
    trials: int
    min_ratio: float
    c_n: float
    min_eigenvalue: float
    worst_times: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def lnd_min_ratio(model: GaussianIncrementModel, n: int, trials: int, interval=(0.1, 1.0),
                  seed: int = 0) -> LndReport:
    """Monte Carlo minimum of :func:`lnd_ratio` over random times and unit vectors.

    ``c_n`` is half the minimum ratio.  ``min_eigenvalue`` is the smallest
    generalised eigenvalue of (increment covariance, diagonal weights) seen
    over the same time configurations, i.e. the minimum over all vectors.
    """
    if n < 2:
        raise ValidationError("n must be >= 2")
    rng = np.random.default_rng(seed)
    lo, hi = float(interval[0]), float(interval[1])
    best, best_eig, worst = math.inf, math.inf, []
    for _ in range(int(trials)):
        t = np.sort(rng.uniform(lo, hi, n))
        if np.any(np.diff(t) <= 0):
            continue
        x = rng.normal(size=(n - 1, model.dim))
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        ratio = lnd_ratio(model, t, x)
        if ratio < best:
            best, worst = ratio, t.tolist()
        weights = np.diff(t) ** (2 * model.hurst)
        cov = model.increment_matrix(t)
        eig = linalg.eigh(cov, np.diag(weights), eigvals_only=True)[0]
        best_eig = min(best_eig, float(eig))
    return LndReport(n, int(trials), float(best), float(best) / 2.0, best_eig, worst)


# ----------------------------------------------------------------------
# regularity of the increment densities
# ----------------------------------------------------------------------


@lru_cache(maxsize=None)
def hermite_peak(order: int) -> float:
    """``max_z |He_order(z) phi(z)|`` with phi the standard normal density."""
    coeffs = np.zeros(order + 1)
    coeffs[-1] = 1.0

    def g(z):
        return abs(hermite_e.hermeval(z, coeffs)) * math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)

    z = np.linspace(0.0, math.sqrt(order + 1) + 6.0, 4001)
    vals = np.abs(hermite_e.hermeval(z, coeffs)) * np.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)
    i = int(np.argmax(vals))
    a, b = z[max(i - 1, 0)], z[min(i + 1, z.size - 1)]
    if b > a:
        res = optimize.minimize_scalar(lambda v: -g(v), bounds=(a, b), method="bounded",
                                       options={"xatol": 1e-13})
        return max(float(vals[i]), -float(res.fun))
    return float(vals[i])


@dataclass
class CbetaReport:
    value: float            # top-order (homogeneous) seminorm
    full: float             # sum of all integer orders below beta plus the top-order term
    sigma: float
    seminorms: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def _seminorm(order: int, sigma: float, d: int) -> float:
    # directional derivatives of the isotropic density peak along a coordinate axis
    return (2 * math.pi) ** (-(d - 1) / 2) * hermite_peak(order) * sigma ** (-(order + d))


def gaussian_increment_cbeta(model: GaussianIncrementModel, s: float, t: float, beta: float) -> CbetaReport:
    """C^beta size of the density of the increment ``w_t - w_s``.

    Integer orders use exact derivative sup norms; a fractional order
    interpolates geometrically between the neighbouring integer orders, so
    ``value`` scales exactly like ``sigma^{-(beta + d)}``.
    """
    if beta < 0:
        raise ValidationError("beta must be non-negative")
    var = float(model.variance(float(s), float(t)))
    if not var > 0:
        raise ValidationError(f"increment variance V({s}, {t}) = {var} is not positive")
    sigma = math.sqrt(var)
    d = model.dim
    j = int(math.floor(beta))
    theta = beta - j
    semis = [_seminorm(i, sigma, d) for i in range(j + 1)]
    if theta > 0:
        upper = _seminorm(j + 1, sigma, d)
        top = semis[j] ** (1 - theta) * upper ** theta
        full = math.fsum(semis) + top
    else:
        top = semis[j]
        full = math.fsum(semis)
    return CbetaReport(float(top), float(full), sigma, semis)


@dataclass
class CnuReport:
    exponent: float | None
    r2: float | None
    c_nu: float | None              # max over J of the integral divided by |J|
    lengths: list = field(default_factory=list)
    integrals: list = field(default_factory=list)
    singularity: float = 0.0         # H (beta + d)
    divergent: bool = False
    log_correction: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _pair_integral(model, beta, a, b, gamma):
    def inner(s):
        if b - s <= 0:
            return 0.0

        # the integrand divided by its diagonal singularity (t - s)^(-gamma)
        def regular(t):
            # the endpoint node t = s gets the limit, read just off the diagonal
            t = max(t, s + 1e-9 * (b - s))
            return gaussian_increment_cbeta(model, s, t, beta).value * (t - s) ** gamma

        val, _ = integrate.quad(regular, s, b, weight="alg", wvar=(-gamma, 0.0), limit=200)
        return val

    val, _ = integrate.quad(inner, a, b, limit=200, epsabs=0, epsrel=1e-10)
    return 2.0 * val


def _cutoff_integral(model, beta, a, b, eps):
    def inner(s):
        lo = s + eps
        if lo >= b:
            return 0.0
        val, _ = integrate.quad(lambda t: gaussian_increment_cbeta(model, s, t, beta).value, lo, b, limit=200)
        return val

    val, _ = integrate.quad(inner, a, b - eps, limit=200)
    return 2.0 * val


def cnu_linearity(model: GaussianIncrementModel, beta: float, interval=(0.0, 1.0),
                  refinements: int = 5) -> CnuReport:
    """Integral of the increment-density C^beta size over J x J, for nested J.

    ``J`` runs over ``[a, a + L 2^-i]``, i = 0..refinements.  The growth
    exponent is the log-log slope of the integral in |J|.  When the diagonal
    singularity ``|t - s|^{-H(beta + d)}`` is not integrable the integral is
    reported as divergent, together with the growth of epsilon-cutoff
    integrals in log(1/epsilon).
    """
    a, b = float(interval[0]), float(interval[1])
    if not b > a:
        raise ValidationError("empty interval")
    gamma = model.hurst * (beta + model.dim)
    if gamma >= 1:
        L = b - a
        eps = [L * 2.0 ** -m for m in range(3, 10)]
        vals = [_cutoff_integral(model, beta, a, b, e) for e in eps]
        logs = [math.log(1 / e) for e in eps]
        slope = float(np.polyfit(logs, vals, 1)[0])
        return CnuReport(None, None, None, [], [], gamma, True,
                         {"epsilons": eps, "integrals": vals, "slope_in_log_inverse_eps": slope})
    lengths = [(b - a) * 2.0 ** -i for i in range(refinements + 1)]
    integrals = [_pair_integral(model, beta, a, a + L, gamma) for L in lengths]
    fit = holder_exponent(lengths, integrals)
    c_nu = max(I / L for I, L in zip(integrals, lengths))
    return CnuReport(fit.slope, fit.r2, c_nu, lengths, integrals, gamma, False, {})


# ----------------------------------------------------------------------
# admissible parameters
# ----------------------------------------------------------------------


@dataclass
class RegionReport:
    admissible: bool
    hurst_ok: bool
    first_ok: bool
    first_slack: float
    second_ok: bool
    second_slack: float

    def to_dict(self) -> dict:
        return asdict(self)


def lnd_param_region(H: float, d: int, alpha: float, p: float, q: float) -> RegionReport:
    """Check ``1/p + (alpha - d/q) H < 1 - d H`` and ``alpha < (1/H - d) min(1/2, 1/q')``.

    Slacks are right-hand side minus left-hand side; ``hurst_ok`` flags
    whether ``0 < H < 1/d``.
    """
    if not H > 0:
        raise ValidationError("H must be positive")
    if not (p >= 1 and q >= 1):
        raise ValidationError("p and q must lie in [1, inf]")
    inv_p = 0.0 if math.isinf(p) else 1.0 / p
    inv_q = 0.0 if math.isinf(q) else 1.0 / q
    inv_q_conj = 1.0 - inv_q
    first = (1.0 - d * H) - (inv_p + (alpha - d * inv_q) * H)
    second = (1.0 / H - d) * min(0.5, inv_q_conj) - alpha
    hurst_ok = H * d < 1
    return RegionReport(bool(hurst_ok and first > 0 and second > 0), bool(hurst_ok),
                        bool(first > 0), float(first), bool(second > 0), float(second))
