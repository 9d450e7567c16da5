"""Select the compiled kernels when available, the numpy ones otherwise.

Set ``SBEPATH_PURE_PYTHON=1`` to force the fallback (used by the
equivalence tests and the benchmark).
"""

from __future__ import annotations

import os

from . import _fallback

if os.environ.get("SBEPATH_PURE_PYTHON", "") not in ("", "0"):
    kernels = _fallback
    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        kernels = _fallback
        BACKEND = "python"

fallback = _fallback

__all__ = ["kernels", "fallback", "BACKEND"]
