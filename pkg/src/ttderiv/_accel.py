"""Backend selection for the numeric hot loops.

The recursions in :mod:`ttderiv.kernels` are compiled with numba when it is
available. Set the environment variable ``TTDERIV_NO_NUMBA=1`` to force the
pure-NumPy fallback (useful for debugging and for the backend benchmark).
"""

import os

_FORCE_OFF = os.environ.get("TTDERIV_NO_NUMBA", "").strip().lower() in {"1", "true", "yes"}

try:
    if _FORCE_OFF:
        raise ImportError("numba disabled via TTDERIV_NO_NUMBA")
    from numba import njit as _njit

    NUMBA_ENABLED = True
except ImportError:
    NUMBA_ENABLED = False
    _njit = None


def jit_kernel(func):
    """Compile *func* with numba, or return it unchanged under the fallback."""
    if NUMBA_ENABLED:
        return _njit(cache=True)(func)
    return func
