"""Numba toggle.

Set ``CARTAN_SF_DISABLE_NUMBA=1`` to run every kernel as plain Python/numpy.
The flag is read once at import time.
"""

import os

_disabled = os.environ.get("CARTAN_SF_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

USING_NUMBA = numba is not None and not _disabled

numba_default = {
    "nogil": True,
    "cache": True,
    "fastmath": False,
    "boundscheck": False,
    "error_model": "numpy",
}


def njit(func):
    """Compile ``func`` with numba when enabled, otherwise return it unchanged."""
    if USING_NUMBA:
        return numba.njit(**numba_default)(func)
    return func
