"""Power-law fits in log-log coordinates."""

from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np
from scipy import stats

from ..errors import ValidationError

__all__ = ["PowerFit", "holder_exponent"]


class PowerFit(NamedTuple):
    slope: float
    intercept: float
    r2: float


def holder_exponent(spans: Sequence[float], norms: Sequence[float]) -> PowerFit:
    """Least-squares fit of ``log norm = slope * log span + intercept``."""
    x = np.asarray(spans, dtype=np.float64)
    y = np.asarray(norms, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValidationError("spans and norms must be 1-D arrays of equal length")
    if x.size < 3:
        raise ValidationError("need at least 3 points for a power-law fit")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValidationError("spans and norms must be positive")
    lx = np.log(x)
    if np.ptp(lx) == 0:
        raise ValidationError("spans are all equal; the slope is undetermined")
    fit = stats.linregress(lx, np.log(y))
    return PowerFit(float(fit.slope), float(fit.intercept), float(fit.rvalue ** 2))
