"""Sampled paths and the generators that produce them.

A :class:`SampledPath` is a finite time grid with d-dimensional values,
interpolated linearly between samples.  Generators emit uniform grids; the
transforms (:func:`reparametrize`, :func:`perturb`) may produce non-uniform
ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import linalg

from .errors import ComputationError, ValidationError

__all__ = [
    "SampledPath",
    "BrownianMotion",
    "FractionalBrownian",
    "CustomCovariance",
    "GaussianSpec",
    "gen_gaussian",
    "euler_maruyama_1d",
    "euler_maruyama_batch",
    "reparametrize",
    "perturb",
    "uniform_times",
    "path_rngs",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class SampledPath:
    """Path sampled on a strictly increasing time grid.

    Parameters
    ----------
    times : array_like, shape (n,)
        Strictly increasing sample times, n >= 2.
    values : array_like, shape (n,) or (n, d)
        Finite sample values.  One-dimensional input is read as d = 1.
    """

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.array(self.times, dtype=np.float64).ravel()
        v = np.array(self.values, dtype=np.float64)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2:
            raise ValidationError("path values must be an (n, d) array")
        if t.shape[0] < 2:
            raise ValidationError(f"a path needs at least 2 samples, got {t.shape[0]}")
        if v.shape[0] != t.shape[0]:
            raise ValidationError(f"{t.shape[0]} times but {v.shape[0]} value rows")
        if v.shape[1] < 1:
            raise ValidationError("path dimension must be >= 1")
        if not np.all(np.isfinite(t)):
            raise ValidationError("path times must be finite")
        steps = np.diff(t)
        if np.any(steps <= 0):
            i = int(np.argmax(steps <= 0))
            raise ValidationError(f"times not strictly increasing at index {i + 1} (t={t[i + 1]!r})")
        if not np.all(np.isfinite(v)):
            i = int(np.argmax(~np.all(np.isfinite(v), axis=1)))
            raise ValidationError(f"non-finite path value at index {i} (t={t[i]!r})")
        object.__setattr__(self, "times", _frozen(t))
        object.__setattr__(self, "values", _frozen(v))

    @property
    def n(self) -> int:
        return self.times.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def span(self) -> tuple[float, float]:
        return float(self.times[0]), float(self.times[-1])

    def at(self, s) -> np.ndarray:
        """Linear interpolation at times ``s`` (scalar or array); shape (..., d).

        Grid times return the stored sample exactly.
        """
        s_arr = np.asarray(s, dtype=np.float64)
        a, b = self.span
        if np.any(s_arr < a) or np.any(s_arr > b):
            raise ValidationError(f"evaluation time outside path span [{a}, {b}]")
        flat = s_arr.ravel()
        i = np.clip(np.searchsorted(self.times, flat, side="right") - 1, 0, self.n - 2)
        t0, t1 = self.times[i], self.times[i + 1]
        lam = ((flat - t0) / (t1 - t0))[:, None]
        out = (1.0 - lam) * self.values[i] + lam * self.values[i + 1]
        return out.reshape(s_arr.shape + (self.dim,))

    def sup_norm(self) -> float:
        """max over samples of the Euclidean norm (the sup of the linear interpolant)."""
        return float(np.max(np.sqrt(np.sum(self.values ** 2, axis=1))))

    def increments(self) -> np.ndarray:
        return np.diff(self.values, axis=0)

    def equals(self, other: "SampledPath") -> bool:
        """Bit-for-bit equality of times and values."""
        return (
            self.times.shape == other.times.shape
            and self.values.shape == other.values.shape
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.values, other.values)
        )


# ----------------------------------------------------------------------
# Gaussian specifications
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class BrownianMotion:
    """Standard Brownian motion, covariance min(s, t)."""

    def covariance(self, s, t):
        return np.minimum(s, t)


@dataclass(frozen=True)
class FractionalBrownian:
    """Fractional Brownian motion with Hurst index ``hurst`` in (0, 1)."""

    hurst: float

    def __post_init__(self):
        if not (0.0 < self.hurst < 1.0):
            raise ValidationError(f"Hurst index must lie in (0, 1), got {self.hurst}")

    def covariance(self, s, t):
        h2 = 2.0 * self.hurst
        s = np.asarray(s, dtype=np.float64)
        t = np.asarray(t, dtype=np.float64)
        return 0.5 * (np.abs(s) ** h2 + np.abs(t) ** h2 - np.abs(t - s) ** h2)


def _default_probe() -> np.ndarray:
    return np.linspace(0.0, 1.0, 33)


@dataclass(frozen=True)
class CustomCovariance:
    """User covariance ``R(s, t)``; vectorised over numpy arrays.

    Symmetry and positive semidefiniteness are checked on ``probe_times``
    at construction.  The rejection message names the probe times that
    carry the most negative eigendirection.
    """

    function: Callable[[np.ndarray, np.ndarray], np.ndarray]
    probe_times: np.ndarray = field(default_factory=_default_probe)
    tolerance: float = 1e-10

    def __post_init__(self):
        probe = np.asarray(self.probe_times, dtype=np.float64).ravel()
        object.__setattr__(self, "probe_times", _frozen(probe))
        check_psd(self.function, probe, self.tolerance)

    def covariance(self, s, t):
        return np.asarray(self.function(s, t), dtype=np.float64)


def check_psd(cov: Callable, times: np.ndarray, tolerance: float = 1e-10) -> np.ndarray:
    """Covariance matrix of ``cov`` on ``times`` after symmetry/PSD checks."""
    tt = np.asarray(times, dtype=np.float64)
    mat = np.asarray(cov(tt[:, None], tt[None, :]), dtype=np.float64)
    if mat.shape != (tt.size, tt.size) or not np.all(np.isfinite(mat)):
        raise ValidationError("covariance must return finite values of shape (n, n)")
    scale = max(1.0, float(np.max(np.abs(np.diag(mat)))))
    asym = np.abs(mat - mat.T)
    if asym.max() > tolerance * scale:
        i, j = np.unravel_index(int(np.argmax(asym)), asym.shape)
        raise ValidationError(f"covariance not symmetric at probe times ({tt[i]!r}, {tt[j]!r})")
    evals, evecs = np.linalg.eigh(0.5 * (mat + mat.T))
    if evals[0] < -tolerance * scale:
        worst = np.argsort(-np.abs(evecs[:, 0]))[:3]
        times_txt = ", ".join(repr(float(tt[k])) for k in sorted(worst))
        raise ValidationError(
            f"covariance not positive semidefinite (eigenvalue {evals[0]:.3e}); "
            f"offending probe times: {times_txt}"
        )
    return mat


@dataclass(frozen=True)
class GaussianSpec:
    """A centred Gaussian process with ``dim`` independent coordinates."""

    kind: BrownianMotion | FractionalBrownian | CustomCovariance
    dim: int = 1

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValidationError(f"dimension must be a positive integer, got {self.dim}")

    def covariance(self, s, t):
        return self.kind.covariance(s, t)

    @property
    def hurst(self) -> float:
        if isinstance(self.kind, FractionalBrownian):
            return self.kind.hurst
        if isinstance(self.kind, BrownianMotion):
            return 0.5
        raise ValidationError("custom covariance has no intrinsic Hurst index")


def uniform_times(n: int, span: Sequence[float]) -> np.ndarray:
    a, b = float(span[0]), float(span[1])
    if n < 2:
        raise ValidationError(f"n must be >= 2, got {n}")
    if not b > a:
        raise ValidationError(f"empty span [{a}, {b}]")
    return np.linspace(a, b, int(n))


def path_rngs(seed: int, count: int) -> list[np.random.Generator]:
    """Independent generators derived from one seed (SeedSequence spawning)."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(int(seed)).spawn(count)]


def _fgn_autocov(hurst: float, m: int, step: float) -> np.ndarray:
    k = np.arange(m + 1, dtype=np.float64)
    h2 = 2.0 * hurst
    return 0.5 * step ** h2 * (np.abs(k + 1) ** h2 - 2.0 * k ** h2 + np.abs(k - 1) ** h2)


def _fgn_circulant(gamma: np.ndarray, m: int, rng: np.random.Generator) -> np.ndarray | None:
    # Davies-Harte: embed the Toeplitz covariance in a 2m circulant
    row = np.concatenate([gamma[: m + 1], gamma[m - 1:0:-1]])
    eig = np.fft.fft(row).real
    if eig.min() < -1e-10 * eig.max():
        return None
    eig = np.clip(eig, 0.0, None)
    size = row.size
    z = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    return np.fft.fft(np.sqrt(eig / size) * z).real[:m]


def _fgn_dense(gamma: np.ndarray, m: int, rng: np.random.Generator) -> np.ndarray:
    toeplitz = linalg.toeplitz(gamma[:m])
    evals, evecs = np.linalg.eigh(toeplitz)
    if evals[0] < -1e-10 * max(1e-300, evals[-1]):
        raise ComputationError("fractional Gaussian noise covariance is not PSD")
    return evecs @ (np.sqrt(np.clip(evals, 0.0, None)) * rng.standard_normal(m))


def gen_gaussian(spec: GaussianSpec, n: int, span: Sequence[float], seed: int,
                 method: str = "auto") -> SampledPath:
    """Sample ``spec`` on ``n`` uniform times over ``span``; the path starts at 0.

    Coordinates use independent streams spawned from ``seed``.  For
    fractional Brownian motion ``method`` is ``"auto"`` (circulant embedding,
    dense factorisation if the embedding has a negative eigenvalue),
    ``"circulant"`` or ``"dense"``.  Custom covariances are sampled as the
    increment process ``X_t - X_a``, which coincides with ``X`` whenever
    ``R(a, .) = 0``.
    """
    if method not in ("auto", "circulant", "dense"):
        raise ValidationError(f"unknown sampling method {method!r}")
    times = uniform_times(n, span)
    m = times.size - 1
    rngs = path_rngs(seed, spec.dim)
    values = np.zeros((times.size, spec.dim))
    kind = spec.kind
    if isinstance(kind, BrownianMotion):
        dt = np.diff(times)
        for c, rng in enumerate(rngs):
            values[1:, c] = np.cumsum(np.sqrt(dt) * rng.standard_normal(m))
    elif isinstance(kind, FractionalBrownian):
        step = (times[-1] - times[0]) / m
        gamma = _fgn_autocov(kind.hurst, m, step)
        for c, rng in enumerate(rngs):
            noise = None
            if method in ("auto", "circulant"):
                noise = _fgn_circulant(gamma, m, rng)
                if noise is None and method == "circulant":
                    raise ComputationError("circulant embedding has negative eigenvalues")
            if noise is None:
                noise = _fgn_dense(gamma, m, rng)
            values[1:, c] = np.cumsum(noise)
    elif isinstance(kind, CustomCovariance):
        a = times[0]
        inner = times[1:]
        full = check_psd(kind.covariance, times, kind.tolerance)
        k_mat = full[1:, 1:] - full[1:, :1] - full[:1, 1:] + full[0, 0]
        evals, evecs = np.linalg.eigh(0.5 * (k_mat + k_mat.T))
        if evals[0] < -kind.tolerance * max(1.0, evals[-1]):
            worst = inner[np.argsort(-np.abs(evecs[:, 0]))[:3]]
            raise ValidationError(f"increment covariance not PSD near times {sorted(worst.tolist())} (from {a})")
        root = evecs * np.sqrt(np.clip(evals, 0.0, None))
        for c, rng in enumerate(rngs):
            values[1:, c] = root @ rng.standard_normal(m)
    else:  # pragma: no cover - guarded by the dataclass types
        raise ValidationError(f"unsupported Gaussian kind {kind!r}")
    return SampledPath(times, values)


# ----------------------------------------------------------------------
# Euler-Maruyama
# ----------------------------------------------------------------------


def euler_maruyama_batch(b: Callable, sigma: Callable, x0: float, n: int,
                         span: Sequence[float], rngs: Sequence[np.random.Generator]) -> tuple[np.ndarray, np.ndarray]:
    """Explicit Euler-Maruyama for many independent 1-D paths at once.

    ``b(t, x)`` and ``sigma(t, x)`` must accept a numpy array ``x``.
    Returns ``(times, values)`` with ``values`` of shape (len(rngs), n).
    Each path draws its noise only from its own generator.
    """
    times = uniform_times(n, span)
    dt = np.diff(times)
    n_paths = len(rngs)
    noise = np.empty((n_paths, n - 1))
    for p, rng in enumerate(rngs):
        noise[p] = rng.standard_normal(n - 1)
    noise *= np.sqrt(dt)[None, :]
    x = np.empty((n_paths, n))
    x[:, 0] = x0
    for i in range(n - 1):
        xi = x[:, i]
        drift = np.broadcast_to(np.asarray(b(times[i], xi), dtype=np.float64), xi.shape)
        vol = np.broadcast_to(np.asarray(sigma(times[i], xi), dtype=np.float64), xi.shape)
        nxt = xi + drift * dt[i] + vol * noise[:, i]
        if not np.all(np.isfinite(nxt)):
            bad = int(np.argmax(~np.isfinite(nxt)))
            raise ComputationError(
                f"non-finite Euler-Maruyama iterate at step {i + 1} (t={times[i + 1]!r}, path {bad})"
            )
        x[:, i + 1] = nxt
    return times, x


def euler_maruyama_1d(b: Callable, sigma: Callable, x0: float, n: int,
                      span: Sequence[float], seed: int) -> SampledPath:
    """One Euler-Maruyama path of dX = b dt + sigma dW on a uniform grid."""
    times, x = euler_maruyama_batch(b, sigma, x0, n, span, path_rngs(seed, 1))
    return SampledPath(times, x[0])


# ----------------------------------------------------------------------
# transforms
# ----------------------------------------------------------------------


def reparametrize(path: SampledPath, phi: SampledPath, atol: float = 1e-12) -> SampledPath:
    """Compose ``path`` with the increasing time change ``phi``.

    ``phi`` is a one-dimensional sampled map from its own time grid onto
    ``path``'s span.  Output times are ``phi.times``.
    """
    if phi.dim != 1:
        raise ValidationError("time change must be one-dimensional")
    targets = phi.values[:, 0]
    if np.any(np.diff(targets) <= 0):
        i = int(np.argmax(np.diff(targets) <= 0))
        raise ValidationError(f"time change not strictly increasing at index {i + 1}")
    a, b = path.span
    tol = atol * max(1.0, abs(a), abs(b))
    if abs(targets[0] - a) > tol or abs(targets[-1] - b) > tol:
        raise ValidationError(
            f"time change maps onto [{targets[0]!r}, {targets[-1]!r}], path span is [{a!r}, {b!r}]"
        )
    return SampledPath(phi.times, path.at(np.clip(targets, a, b)))


def perturb(path: SampledPath, f: SampledPath) -> SampledPath:
    """Pointwise sum ``path + f`` on ``path``'s grid (``f`` linearly resampled)."""
    if f.dim != path.dim:
        raise ValidationError(f"dimension mismatch: path has d={path.dim}, perturbation d={f.dim}")
    fa, fb = f.span
    a, b = path.span
    if fa > a or fb < b:
        raise ValidationError(f"perturbation span [{fa}, {fb}] does not cover path span [{a}, {b}]")
    return SampledPath(path.times, path.values + f.at(path.times))
