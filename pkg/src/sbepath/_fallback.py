"""Pure numpy implementations of the hot kernels.

Signatures mirror the compiled ``_kernels`` extension exactly; ``_backend``
picks one of the two at import time.
"""

from __future__ import annotations

import numpy as np

__all__ = ["best_partition", "ball_mass_sorted", "ball_mass_hist"]

_CHUNK = 1 << 21


def best_partition(weights):
    """Maximise the additive partition score over index sub-sequences.

    ``weights[i, j]`` (i < j) is the score of the step i -> j.  Returns the
    array ``best`` of optimal scores ending at each index and the
    back-pointer array ``prev``.
    """
    w = np.ascontiguousarray(weights, dtype=np.float64)
    n = w.shape[0]
    best = np.zeros(n)
    prev = np.full(n, -1, dtype=np.int64)
    for j in range(1, n):
        cand = best[:j] + w[:j, j]
        # argmax returns the first maximiser, matching the strict '>' scan
        i = int(np.argmax(cand))
        best[j] = cand[i]
        prev[j] = i
    return best, prev


def ball_mass_sorted(positions, cumulative, centers, radii):
    """Closed-ball masses for sorted 1-D atoms.

    ``cumulative`` has length m + 1 with ``cumulative[0] == 0``.  Output has
    shape (len(centers), len(radii)).
    """
    pos = np.asarray(positions, dtype=np.float64)
    cum = np.asarray(cumulative, dtype=np.float64)
    y = np.asarray(centers, dtype=np.float64)[:, None]
    r = np.asarray(radii, dtype=np.float64)[None, :]
    lo = np.searchsorted(pos, y - r, side="left")
    hi = np.searchsorted(pos, y + r, side="right")
    return cum[hi] - cum[lo]


def ball_mass_hist(atoms, weights, centers, radii):
    """Closed-ball masses for atoms in any dimension, all radii at once.

    Each atom's weight is binned at the first radius that reaches it and the
    bins are accumulated, so the cost is O(m log R) per centre.
    """
    a = np.asarray(atoms, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    c = np.asarray(centers, dtype=np.float64)
    r = np.asarray(radii, dtype=np.float64)
    n_c, n_r = c.shape[0], r.shape[0]
    out = np.zeros((n_c, n_r))
    r2 = r * r
    step = max(1, _CHUNK // max(1, a.shape[0]))
    for start in range(0, n_c, step):
        block = c[start:start + step]
        d2 = ((block[:, None, :] - a[None, :, :]) ** 2).sum(axis=2)
        bins = np.searchsorted(r2, d2, side="left")
        rows = np.arange(block.shape[0])[:, None] * (n_r + 1)
        hist = np.bincount((rows + bins).ravel(), weights=np.broadcast_to(w, d2.shape).ravel(),
                           minlength=block.shape[0] * (n_r + 1))
        hist = hist.reshape(block.shape[0], n_r + 1)[:, :n_r]
        out[start:start + step] = np.cumsum(hist, axis=1)
    return out
