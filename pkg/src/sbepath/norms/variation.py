"""p-variation of sequences in normed spaces.

The exact value is a longest-path problem over index pairs: with
``W[i, j] = ||f_j - f_i||^p`` the p-th power of the variation is the best
score of a chain ``0 = i_0 < i_1 < ... < i_m = n-1``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .._backend import kernels
from ..errors import ValidationError
from .sbe import SbeParams, resolve_sbe_grid, sbe_report

__all__ = [
    "VariationParams",
    "VariationResult",
    "DyadicBound",
    "distance_matrix",
    "powered",
    "p_variation",
    "p_variation_partition",
    "p_variation_distances",
    "p_variation_exhaustive",
    "dyadic_variation_bound",
    "dyadic_increments",
    "variation_of_occupation",
]


@dataclass(frozen=True)
class VariationParams:
    p: float = 2.0
    mode: str = "exact"          # 'exact' or 'dyadic'
    epsilon: float = 0.5

    def __post_init__(self):
        if not (1 <= self.p < math.inf):
            raise ValidationError(f"variation exponent must be finite and >= 1, got {self.p}")
        if self.mode not in ("exact", "dyadic"):
            raise ValidationError("mode must be 'exact' or 'dyadic'")
        if not (0 < self.epsilon < 1):
            raise ValidationError("epsilon must lie in (0, 1)")


@dataclass
class VariationResult:
    value: float
    partition: list
    p: float
    power: float = 0.0          # sum of ||increment||^p over the optimal partition


def _default_norm(diff) -> float:
    return float(np.linalg.norm(np.ravel(diff)))


def distance_matrix(values: Sequence, norm: Callable | None = None) -> np.ndarray:
    """Upper-triangular matrix ``D[i, j] = norm(values[j] - values[i])``."""
    if norm is None:
        arr = np.asarray(values, dtype=np.float64)
        arr = arr.reshape(arr.shape[0], -1)
        n = arr.shape[0]
        out = np.zeros((n, n))
        for i in range(n - 1):
            diff = np.abs(arr[i + 1:] - arr[i])
            if arr.shape[1] == 1:
                out[i, i + 1:] = diff[:, 0]
                continue
            # scaled so that squaring neither underflows nor overflows
            big = diff.max(axis=1)
            safe = np.where(big > 0, big, 1.0)
            out[i, i + 1:] = big * np.sqrt(np.sum((diff / safe[:, None]) ** 2, axis=1))
        return out
    seq = list(values)
    n = len(seq)
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            out[i, j] = norm(np.asarray(seq[j]) - np.asarray(seq[i]))
    return out


def powered(dist: np.ndarray, p: float) -> np.ndarray:
    """``dist ** p`` on the strict upper triangle."""
    return np.triu(np.asarray(dist, dtype=np.float64), 1) ** float(p)


def _scaled_powers(dist: np.ndarray, p: float) -> tuple[np.ndarray, float]:
    # powers of (dist / max) cannot overflow and underflow only for negligible
    # entries; shared by the dynamic programme and the exhaustive oracle
    upper = np.triu(np.asarray(dist, dtype=np.float64), 1)
    top = float(upper.max()) if upper.size else 0.0
    if not top > 0:
        return np.zeros_like(upper), 0.0
    # a power of two, so the division is exact
    scale = math.ldexp(1.0, math.frexp(top)[1])
    return (upper / scale) ** float(p), scale


def p_variation_distances(dist: np.ndarray, p: float) -> VariationResult:
    """Exact p-variation from a pairwise distance matrix."""
    if not 1 <= p < math.inf:
        raise ValidationError(f"variation exponent must be finite and >= 1, got {p}")
    dist = np.asarray(dist, dtype=np.float64)
    n = dist.shape[0]
    if n < 2:
        return VariationResult(0.0, list(range(n)), p, 0.0)
    weights, scale = _scaled_powers(dist, p)
    best, prev = kernels.best_partition(weights)
    chain = [n - 1]
    while chain[-1] != 0:
        chain.append(int(prev[chain[-1]]))
    chain.reverse()
    top = float(best[n - 1])
    power = top * scale ** p
    if len(chain) == 2:
        # avoid the round trip x -> x^p -> x^(1/p) on the trivial partition
        return VariationResult(float(dist[0, n - 1]), chain, p, power)
    return VariationResult(scale * top ** (1.0 / p), chain, p, power)


def p_variation_partition(values: Sequence, p: float, norm: Callable | None = None) -> VariationResult:
    return p_variation_distances(distance_matrix(values, norm), p)


def p_variation(values: Sequence, p: float, norm: Callable | None = None) -> float:
    """Exact p-variation of a finite sequence (Euclidean norm by default)."""
    return p_variation_partition(values, p, norm).value


def p_variation_exhaustive(dist: np.ndarray, p: float) -> float:
    """Brute force over every sub-partition; the p-th power of the variation."""
    w, scale = _scaled_powers(dist, p)
    n = w.shape[0]
    best = 0.0
    inner = range(1, n - 1)
    for size in range(n - 1):
        for pick in itertools.combinations(inner, size):
            chain = (0, *pick, n - 1)
            total = 0.0
            for a, b in zip(chain, chain[1:]):
                total += w[a, b]
            best = max(best, total)
    return best * scale ** p


@dataclass
class DyadicBound:
    bound: float              # constant * raw
    raw: float                # sum_N N^eps sum_k ||increment||^q
    constant: float
    levels: list = field(default_factory=list)        # N = 1, 2, 4, ...
    level_sums: list = field(default_factory=list)    # sum_k ||increment||^q at each level

    def to_dict(self) -> dict:
        return asdict(self)


def dyadic_increments(values: Sequence, norm: Callable | None = None) -> list[np.ndarray]:
    """Increment norms at every dyadic level of a sequence of length 2^L + 1."""
    norm = norm or _default_norm
    seq = [np.asarray(v) for v in values]
    n = len(seq) - 1
    if n < 1 or n & (n - 1):
        raise ValidationError(f"dyadic levels need 2^L + 1 samples, got {len(seq)}")
    out = []
    level = 1
    while level <= n:
        stride = n // level
        out.append(np.array([norm(seq[(k + 1) * stride] - seq[k * stride]) for k in range(level)]))
        level *= 2
    return out


def dyadic_variation_bound(level_norms: Sequence, q: float, epsilon: float) -> DyadicBound:
    """Upper bound for the q-th power of the q-variation from dyadic increments.

    ``level_norms[n]`` holds the 2^n increment norms at level N = 2^n.  The
    returned ``bound`` carries the explicit constant
    ``2^{q-1} (sum_N N^{-eps q'/q})^{q-1}``, so for a sequence sampled on the
    finest dyadic grid it dominates the exact value.
    """
    if not q >= 1 or math.isinf(q):
        raise ValidationError("q must be finite and >= 1")
    if not epsilon > 0:
        raise ValidationError("epsilon must be positive")
    levels, sums = [], []
    for n, norms in enumerate(level_norms):
        norms = np.asarray(norms, dtype=np.float64)
        if norms.size != 2 ** n:
            raise ValidationError(f"level {n} must hold {2 ** n} increments, got {norms.size}")
        levels.append(2 ** n)
        sums.append(math.fsum((norms ** q).tolist()))
    raw = math.fsum(N ** epsilon * s for N, s in zip(levels, sums))
    if q == 1:
        constant = 1.0
    else:
        conj = q / (q - 1)
        geo = math.fsum(N ** (-epsilon * conj / q) for N in levels)
        constant = 2.0 ** (q - 1) * geo ** (q - 1)
    return DyadicBound(constant * raw, raw, constant, levels, sums)


def variation_of_occupation(path, a: float, times: Sequence[float], r: float,
                            sbe: SbeParams, return_partition: bool = False):
    """r-variation of t -> mu_{a,t} with SBE-norm increments.

    The increment between partition points s < t is the occupation measure
    of [s, t].  Quadrature grids are resolved once from the occupation
    measure of the whole partition range, so every increment is measured on
    the same radius grid and a common centre lattice.
    """
    from ..occupation import occupation

    pts = np.asarray(sorted(set(float(t) for t in times) | {float(a)}), dtype=np.float64)
    pts = pts[pts >= a]
    if pts.size < 2:
        raise ValidationError("need at least one partition point after a")
    if not r >= 1:
        raise ValidationError("variation exponent r must be >= 1")
    whole = occupation(path, pts[0], pts[-1])
    grid = resolve_sbe_grid(whole, sbe)
    fixed = sbe
    if not sbe.far_field:
        fixed = replace(sbe, r_min=grid.r_min, r_max=grid.r_max,
                        y_spacing=float(grid.y_spacing[0]), y_bounds=None)
    n = pts.size
    dist = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            dist[i, j] = sbe_report(occupation(path, pts[i], pts[j]), fixed).value
    res = p_variation_distances(dist, r)
    if return_partition:
        return res.value, [float(pts[k]) for k in res.partition], dist
    return res.value
