"""Dyadic difference operators and their exact integer coefficient tables.

The order-k operator acts on functions of a radius::

    D_0 F(r)     = F(r) - F(r/2)
    D_{k+1} F(r) = D_k F(r) - 2^{k+1} D_k F(r/2)

so ``D_k F(r) = sum_j a_j F(r / 2^j)`` for j = 0..k+1 with integer ``a_j``.
The adjoint on L^2(dr/r) uses the same coefficients at ``F(2^j r)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import ComputationError, ValidationError

__all__ = [
    "MAX_ORDER",
    "DeltaKCoeffs",
    "delta_k_coeffs",
    "order_for",
    "is_order_boundary",
    "apply_delta_k",
    "apply_delta_k_star",
    "chk_coeff",
    "chk_table",
    "leibniz_coeffs",
    "reconstruction_sum",
    "reconstruction_residual",
    "reconstruction_residuals",
    "run_selftest",
]

MAX_ORDER = 32


@dataclass(frozen=True)
class DeltaKCoeffs:
    """Integer coefficients ``a_j`` of the order-``k`` operator at scales ``2^-j``."""

    k: int
    coeffs: tuple[int, ...]

    @property
    def scales(self) -> tuple[float, ...]:
        return tuple(2.0 ** -j for j in range(len(self.coeffs)))

    def pairs(self) -> list[tuple[float, int]]:
        return list(zip(self.scales, self.coeffs))

    def moment(self, m: int) -> Fraction:
        """``sum_j a_j 2^{-j m}`` in exact arithmetic."""
        return sum((Fraction(a, 2 ** (j * m)) for j, a in enumerate(self.coeffs)), Fraction(0))

    def as_floats(self) -> np.ndarray:
        return np.array([float(a) for a in self.coeffs])


@lru_cache(maxsize=None)
def delta_k_coeffs(k: int) -> DeltaKCoeffs:
    """Coefficients of the order-``k`` operator, 0 <= k <= 32."""
    if int(k) != k or not (0 <= k <= MAX_ORDER):
        raise ValidationError(f"order k must be an integer in [0, {MAX_ORDER}], got {k}")
    coeffs = [1, -1]
    for level in range(int(k)):
        factor = 2 ** (level + 1)
        shifted = [0] + coeffs
        coeffs = [c - factor * s for c, s in zip(coeffs + [0], shifted)]
    return DeltaKCoeffs(int(k), tuple(coeffs))


def order_for(alpha: float, d: int) -> int:
    """``ceil(alpha + d - 1)``, the order used by the small-ball norm."""
    value = Fraction(alpha).limit_denominator(10 ** 12) + d - 1
    return max(0, math.ceil(value))


def is_order_boundary(alpha: float, d: int) -> bool:
    """True when ``alpha + d`` is an integer (the ceiling convention kicks in)."""
    return (Fraction(alpha).limit_denominator(10 ** 12) + d).denominator == 1


def _evaluate(F: Callable, points: list) -> list:
    values = []
    for x in points:
        v = F(x)
        if not np.all(np.isfinite(v)):
            raise ComputationError(f"non-finite function value at r={x!r}")
        values.append(v)
    return values


def _combine(coeffs: tuple[int, ...], values: list):
    if all(np.ndim(v) == 0 for v in values):
        if all(isinstance(v, (bool, int, np.bool_, np.integer)) for v in values):
            return sum(a * int(v) for a, v in zip(coeffs, values))
        return math.fsum(float(a) * float(v) for a, v in zip(coeffs, values))
    out = np.zeros(np.broadcast_shapes(*(np.shape(v) for v in values)))
    for a, v in zip(coeffs, values):
        out = out + float(a) * np.asarray(v, dtype=np.float64)
    return out


def apply_delta_k(F: Callable, k: int, r):
    """``sum_j a_j F(r / 2^j)``.  Integer/boolean values are combined exactly."""
    c = delta_k_coeffs(k)
    r_arr = r if np.ndim(r) == 0 else np.asarray(r, dtype=np.float64)
    return _combine(c.coeffs, _evaluate(F, [r_arr / 2 ** j for j in range(k + 2)]))


def apply_delta_k_star(F: Callable, k: int, r):
    """Adjoint: ``sum_j a_j F(2^j r)``."""
    c = delta_k_coeffs(k)
    r_arr = r if np.ndim(r) == 0 else np.asarray(r, dtype=np.float64)
    return _combine(c.coeffs, _evaluate(F, [r_arr * 2 ** j for j in range(k + 2)]))


@lru_cache(maxsize=None)
def _chk_row(k: int, hmax: int) -> tuple[int, ...]:
    # c_{h,k} = c_{h,k-1} + 2^k c_{h-1,k}: the generating function of
    # c_{.,k} is prod_{j<=k} 1/(1 - 2^j z)
    row = [1] * (hmax + 1)
    for level in range(1, k + 1):
        factor = 2 ** level
        nxt = [0] * (hmax + 1)
        for h in range(hmax + 1):
            nxt[h] = row[h] + (factor * nxt[h - 1] if h else 0)
        row = nxt
    return tuple(row)


def chk_coeff(h: int, k: int) -> int:
    """``sum over h_0+...+h_k = h of prod_j 2^{j h_j}``, as a Python int."""
    if h < 0 or k < 0 or int(h) != h or int(k) != k:
        raise ValidationError("h and k must be non-negative integers")
    return _chk_row(int(k), int(h))[int(h)]


def chk_table(hmax: int, k: int) -> tuple[int, ...]:
    return _chk_row(int(k), int(hmax))


def leibniz_coeffs(degree: int) -> tuple[Fraction, ...]:
    """Coefficients ``b_h`` with ``D_{k}(r^deg F)(r) = sum_h b_h r^deg D_{k-deg} F(r / 2^h)``.

    Obtained by expanding ``D_{deg-1}`` of ``r^deg F``; for ``deg = 0`` the
    identity is trivial and ``(1,)`` is returned.
    """
    if degree < 0:
        raise ValidationError("degree must be non-negative")
    if degree == 0:
        return (Fraction(1),)
    a = delta_k_coeffs(degree - 1).coeffs
    return tuple(Fraction(c, 2 ** (h * degree)) for h, c in enumerate(a))


def reconstruction_sum(phi: Callable, k: int, r: float, H: int) -> float:
    """``sum_{h=0}^{H} c_{h,k} (D_k^* phi)(2^h r)``."""
    coeffs = chk_table(H, k)
    terms = []
    for h in range(H + 1):
        star = apply_delta_k_star(phi, k, r * 2.0 ** h)
        terms.append(float(coeffs[h]) * float(star))
    return math.fsum(terms)


def reconstruction_residual(phi: Callable, k: int, r: float, H: int) -> float:
    """``|phi(r) - reconstruction_sum(phi, k, r, H)|``."""
    return abs(float(phi(r)) - reconstruction_sum(phi, k, r, H))


def reconstruction_residuals(phi: Callable, k: int, r: float, H: int) -> list[float]:
    """Residuals for every truncation level 0..H (cumulative, exact summation)."""
    coeffs = chk_table(H, k)
    target = float(phi(r))
    terms: list[float] = []
    out = []
    for h in range(H + 1):
        terms.append(float(coeffs[h]) * float(apply_delta_k_star(phi, k, r * 2.0 ** h)))
        out.append(abs(math.fsum(terms + [-target])))
    return out


# ----------------------------------------------------------------------
# identity suite
# ----------------------------------------------------------------------


def _check_polynomials(rng) -> tuple[bool, str]:
    worst = 0.0
    for k in range(7):
        for _ in range(20):
            deg = int(rng.integers(0, k + 1))
            poly = rng.uniform(-1, 1, deg + 1)
            for e in range(-8, 9):
                r = 2.0 ** e
                f = lambda x: float(np.polyval(poly, x))  # noqa: E731
                val = apply_delta_k(f, k, r)
                # relative to the size of the terms that cancel
                scale = math.fsum(abs(a * f(r / 2 ** j)) for j, a in enumerate(delta_k_coeffs(k).coeffs))
                worst = max(worst, abs(val) / scale)
    return worst <= 1e-10, f"max |D_k p| relative to sum_j |a_j p(r/2^j)| = {worst:.2e}"


def _check_adjoint(rng) -> tuple[bool, str]:
    xs = rng.uniform(0, 4, 1000) * 2.0 ** rng.integers(-3, 4, 1000)
    ys = rng.uniform(0, 4, 1000) * 2.0 ** rng.integers(-3, 4, 1000)
    # include exact dyadic coincidences, where the indicator edges meet
    xs[:50] = ys[:50] * 2.0 ** rng.integers(0, 4, 50)
    bad = 0
    for x, y in zip(xs, ys):
        k = int(rng.integers(0, 7))
        lhs = apply_delta_k(lambda rr: rr >= y, k, x)
        rhs = apply_delta_k_star(lambda rr: rr <= x, k, y)
        bad += lhs != rhs
    return bad == 0, f"{bad} mismatches on 1000 probes"


def _check_chk_bound() -> tuple[bool, str]:
    bad = [(h, k) for k in range(6) for h in range(21) if chk_coeff(h, k) > 2 ** k * 2 ** (h * k)]
    closed = all(chk_coeff(h, 1) == 2 ** (h + 1) - 1 for h in range(21)) and all(
        chk_coeff(h, 0) == 1 for h in range(21))
    return not bad and closed, f"bound violations: {bad}; closed forms {'ok' if closed else 'wrong'}"


def _check_reconstruction() -> tuple[bool, str]:
    res = reconstruction_residual(lambda r: math.exp(-r * r), 0, 1.0, 40)
    return res < 1e-12, f"residual {res:.2e}"


def _check_coeffs() -> tuple[bool, str]:
    bad = []
    for k in range(MAX_ORDER + 1):
        c = delta_k_coeffs(k)
        if any(c.moment(m) != 0 for m in range(k + 1)):
            bad.append(k)
    return not bad, f"orders failing annihilation moments: {bad}"


def run_selftest(seed: int = 0) -> list[tuple[str, bool, str]]:
    """Run the identity suite; returns (name, passed, detail) rows."""
    rng = np.random.default_rng(seed)
    checks = [
        ("coefficient moments", _check_coeffs()),
        ("polynomial annihilation", _check_polynomials(rng)),
        ("adjoint indicator identity", _check_adjoint(rng)),
        ("c_hk bound and closed forms", _check_chk_bound()),
        ("reconstruction residual", _check_reconstruction()),
    ]
    return [(name, bool(ok), detail) for name, (ok, detail) in checks]
