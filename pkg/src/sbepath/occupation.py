"""Occupation measures of sampled paths and small-ball queries on them."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from ._backend import kernels
from .errors import ValidationError
from .paths import SampledPath

__all__ = [
    "OccupationMeasure",
    "SmallBallIndex",
    "occupation",
    "occupation_cells",
    "small_ball",
    "brute_force_ball_mass",
    "translate",
    "fourier_occupation",
]


@dataclass(frozen=True, eq=False)
class OccupationMeasure:
    """Weighted atomic measure ``sum_i w_i delta_{atoms[i]}``.

    When ``span = (s, t)`` is given the weights must add up to ``t - s``
    (checked with an exact summation).  The empty measure is allowed and
    represents zero.
    """

    atoms: np.ndarray
    weights: np.ndarray
    span: tuple | None = None

    def __post_init__(self):
        a = np.array(self.atoms, dtype=np.float64)
        w = np.array(self.weights, dtype=np.float64).ravel()
        if a.ndim == 1:
            a = a[:, None]
        if a.ndim != 2 or a.shape[0] != w.shape[0]:
            raise ValidationError("atoms must be (m, d) with one weight per atom")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(w))):
            raise ValidationError("atoms and weights must be finite")
        if np.any(w <= 0):
            raise ValidationError("occupation weights must be positive")
        if self.span is not None:
            s, t = float(self.span[0]), float(self.span[1])
            if not t > s:
                raise ValidationError(f"empty span [{s}, {t}]")
            total = math.fsum(w.tolist())
            slack = np.spacing(t - s) + 4 * np.finfo(float).eps * (t - s) * max(1, w.size)
            if abs(total - (t - s)) > slack:
                raise ValidationError(f"weights sum to {total!r}, span length is {t - s!r}")
            object.__setattr__(self, "span", (s, t))
        a.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "atoms", a)
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]

    @property
    def size(self) -> int:
        return self.weights.shape[0]

    @property
    def total_mass(self) -> float:
        return math.fsum(self.weights.tolist())

    def support_box(self):
        if self.size == 0:
            z = np.zeros(self.dim)
            return z, z.copy()
        return self.atoms.min(axis=0), self.atoms.max(axis=0)

    def support_ball(self):
        """Barycentre and the largest atom distance from it."""
        if self.size == 0:
            return np.zeros(self.dim), 0.0
        c = (self.weights[:, None] * self.atoms).sum(axis=0) / self.weights.sum()
        r = float(np.max(np.sqrt(((self.atoms - c) ** 2).sum(axis=1))))
        return c, r

    def nearest_neighbor_spacing(self) -> float:
        """Median distance from each distinct atom location to its nearest neighbour (0 if < 2)."""
        pts = np.unique(self.atoms, axis=0)
        if pts.shape[0] < 2:
            return 0.0
        if self.dim == 1:
            gaps = np.diff(pts[:, 0])
            nn = np.minimum(np.concatenate([[np.inf], gaps]), np.concatenate([gaps, [np.inf]]))
        else:
            nn = cKDTree(pts).query(pts, k=2)[0][:, 1]
        return float(np.median(nn))

    def median_step(self) -> float:
        """Median distance between consecutive atoms (0 if < 2).

        For the measure of a sampled path the atoms are in time order, so
        this is the typical spatial increment: the scale below which the
        atomic measure stops resembling the path's occupation.
        """
        if self.size < 2:
            return 0.0
        steps = np.sqrt(np.sum(np.diff(self.atoms, axis=0) ** 2, axis=1))
        return float(np.median(steps))

    def default_r_min(self) -> float:
        spacing = self.nearest_neighbor_spacing()
        if spacing > 0:
            return 2.0 * spacing
        _, radius = self.support_ball()
        return 2.0 ** -10 * max(radius, 1.0)

    def ball_profile(self, centers, radii) -> np.ndarray:
        return SmallBallIndex(self).profile(centers, radii)

    def translate(self, shift) -> "OccupationMeasure":
        return translate(self, shift)

    def concat(self, other: "OccupationMeasure") -> "OccupationMeasure":
        if other.dim != self.dim:
            raise ValidationError("cannot concatenate measures of different dimension")
        span = None
        if self.span is not None and other.span is not None and self.span[1] == other.span[0]:
            span = (self.span[0], other.span[1])
        return OccupationMeasure(np.vstack([self.atoms, other.atoms]),
                                 np.concatenate([self.weights, other.weights]), span)

    def sorted_pairs(self) -> np.ndarray:
        """Rows (x1..xd, w) in lexicographic order; for multiset comparison."""
        rows = np.column_stack([self.atoms, self.weights])
        order = np.lexsort(rows.T[::-1])
        return rows[order]


def occupation_cells(path: SampledPath, s: float, t: float):
    """Cell indices and overlap weights of the grid cells meeting (s, t)."""
    a, b = path.span
    s, t = float(s), float(t)
    if not s < t:
        raise ValidationError(f"occupation needs s < t, got s={s!r}, t={t!r}")
    if s < a or t > b:
        raise ValidationError(f"[{s}, {t}] is not inside the path span [{a}, {b}]")
    times = path.times
    first = max(int(np.searchsorted(times, s, side="right")) - 1, 0)
    last = int(np.searchsorted(times, t, side="left")) - 1
    idx = np.arange(first, last + 1)
    weights = np.minimum(times[idx + 1], t) - np.maximum(times[idx], s)
    keep = weights > 0
    return idx[keep], weights[keep]


def occupation(path: SampledPath, s: float, t: float) -> OccupationMeasure:
    """Left-endpoint occupation measure of ``path`` over [s, t].

    Cell ``[t_i, t_{i+1}]`` contributes an atom at ``path(t_i)`` with weight
    equal to its overlap with [s, t].
    """
    idx, weights = occupation_cells(path, s, t)
    return OccupationMeasure(path.values[idx], weights, (float(s), float(t)))


class SmallBallIndex:
    """Search structure answering ``mu(B(y, r))`` for closed Euclidean balls.

    ``mass`` is exact: it returns the correctly rounded sum of the selected
    weights, identical to :func:`brute_force_ball_mass`.  ``profile`` is the
    fast vectorised path used by the norm engines (float prefix sums).
    """

    def __init__(self, mu: OccupationMeasure):
        self.measure = mu
        self.dim = mu.dim
        self._exact_prefix = None
        if self.dim == 1:
            order = np.argsort(mu.atoms[:, 0], kind="stable")
            self.positions = np.ascontiguousarray(mu.atoms[order, 0])
            self.sorted_weights = np.ascontiguousarray(mu.weights[order])
            self.cumulative = np.concatenate([[0.0], np.cumsum(self.sorted_weights)])
            self.tree = None
        else:
            self.tree = cKDTree(mu.atoms) if mu.size else None

    # exact single queries -------------------------------------------------

    def _prefix(self):
        # integer prefix sums of the weights scaled by a common power of two
        if self._exact_prefix is None:
            parts = [math.frexp(w) for w in self.sorted_weights.tolist()]
            shift = max((53 - e for _, e in parts), default=0)
            ints = [int(m * (1 << 53)) << (e - 53 + shift) for m, e in parts]
            prefix = [0]
            for v in ints:
                prefix.append(prefix[-1] + v)
            self._exact_prefix = (prefix, shift)
        return self._exact_prefix

    def _range_1d(self, y: float, r: float) -> tuple[int, int]:
        pos = self.positions
        inside = lambda i: abs(pos[i] - y) <= r  # noqa: E731 - same predicate as brute force
        mid = int(np.searchsorted(pos, y, side="left"))
        lo, hi = 0, mid
        while lo < hi:  # first index left of y whose distance is within r
            k = (lo + hi) // 2
            if inside(k):
                hi = k
            else:
                lo = k + 1
        start = lo
        lo, hi = mid, pos.size
        while lo < hi:  # first index right of y that leaves the ball
            k = (lo + hi) // 2
            if inside(k):
                lo = k + 1
            else:
                hi = k
        return start, lo

    def mass(self, r: float, y) -> float:
        """Exact closed-ball mass; negative radii give 0."""
        if r < 0 or self.measure.size == 0:
            return 0.0
        y_arr = np.atleast_1d(np.asarray(y, dtype=np.float64))
        if y_arr.shape != (self.dim,):
            raise ValidationError(f"query point must have dimension {self.dim}")
        if self.dim == 1:
            start, stop = self._range_1d(float(y_arr[0]), float(r))
            if stop <= start:
                return 0.0
            prefix, shift = self._prefix()
            return float(Fraction(prefix[stop] - prefix[start]) / Fraction(2) ** shift)
        reach = float(r) * (1 + 1e-12) + 1e-300
        cand = np.array(self.tree.query_ball_point(y_arr, reach), dtype=np.int64)
        if cand.size == 0:
            return 0.0
        dist = np.sqrt(np.sum((self.measure.atoms[cand] - y_arr) ** 2, axis=1))
        return math.fsum(self.measure.weights[cand[dist <= r]].tolist())

    # vectorised profiles --------------------------------------------------

    def profile(self, centers, radii) -> np.ndarray:
        """Matrix of masses ``mu(B(centers[i], radii[j]))``."""
        y = np.asarray(centers, dtype=np.float64)
        if y.ndim == 1:
            y = y[:, None]
        r = np.asarray(radii, dtype=np.float64)
        if self.measure.size == 0:
            return np.zeros((y.shape[0], r.shape[0]))
        if self.dim == 1:
            return kernels.ball_mass_sorted(self.positions, self.cumulative, y[:, 0], r)
        return kernels.ball_mass_hist(self.measure.atoms, self.measure.weights, y, r)


def small_ball(idx: SmallBallIndex, r: float, y) -> float:
    """``mu({x : |x - y| <= r})`` through the index."""
    return idx.mass(r, y)


def brute_force_ball_mass(mu: OccupationMeasure, r: float, y) -> float:
    """Reference implementation: scan every atom."""
    if r < 0 or mu.size == 0:
        return 0.0
    y_arr = np.atleast_1d(np.asarray(y, dtype=np.float64))
    if mu.dim == 1:
        dist = np.abs(mu.atoms[:, 0] - y_arr[0])
    else:
        dist = np.sqrt(np.sum((mu.atoms - y_arr) ** 2, axis=1))
    return math.fsum(mu.weights[dist <= r].tolist())


def translate(mu: OccupationMeasure, y) -> OccupationMeasure:
    """Shift every atom by ``y``."""
    shift = np.atleast_1d(np.asarray(y, dtype=np.float64))
    if shift.shape != (mu.dim,):
        raise ValidationError(f"shift has dimension {shift.size}, measure has {mu.dim}")
    return OccupationMeasure(mu.atoms + shift, mu.weights, mu.span)


def fourier_occupation(mu: OccupationMeasure, xi: Sequence[float] | float) -> complex:
    """``sum_i w_i exp(i xi . atom_i)``."""
    x = np.atleast_1d(np.asarray(xi, dtype=np.float64))
    if x.shape != (mu.dim,):
        raise ValidationError(f"frequency has dimension {x.size}, measure has {mu.dim}")
    phase = mu.atoms @ x
    return complex(np.sum(mu.weights * np.exp(1j * phase)))
