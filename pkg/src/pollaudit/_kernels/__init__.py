"""Kernel backend selection.

The compiled extension is preferred when present; the pure-Python module
is the fallback. ``POLLAUDIT_KERNELS=py`` forces the fallback and
``POLLAUDIT_KERNELS=c`` requires the extension (import error if it is
missing), which the benchmark uses to compare the two.
"""

from __future__ import annotations

import os

import numpy as np

_forced = os.environ.get("POLLAUDIT_KERNELS", "").strip().lower()

if _forced in ("py", "python"):
    from . import _ref as _impl
elif _forced in ("c", "compiled", "fast"):
    from . import _fast as _impl  # type: ignore[no-redef]
else:
    try:
        from . import _fast as _impl  # type: ignore[no-redef]
    except ImportError:
        from . import _ref as _impl

BACKEND: str = _impl.BACKEND

log_binom_pmf = _impl.log_binom_pmf
log_binom_sf = _impl.log_binom_sf
so_crossing_curve = _impl.so_crossing_curve


def log_convolve_binom(prior_log: np.ndarray, m: int, p: float) -> np.ndarray:
    arr = np.ascontiguousarray(prior_log, dtype=np.float64)
    return _impl.log_convolve_binom(arr, int(m), float(p))
