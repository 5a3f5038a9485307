"""Numba acceleration switch.

Hot numeric kernels (Graver completion, trajectory sampling) exist in two
equivalent versions: a numba ``@njit`` one and a pure-numpy fallback.  The
fallback is selected by setting the environment variable
``CBDP_DISABLE_NUMBA=1`` before import, or automatically when numba is not
importable.  Both paths produce bit-identical results.
"""

import os

DISABLE_ENV = "CBDP_DISABLE_NUMBA"

_disabled = os.environ.get(DISABLE_ENV, "").strip() not in ("", "0", "false", "False")

if not _disabled:
    try:
        from numba import njit

        HAVE_NUMBA = True
    except ImportError:  # pragma: no cover - env without numba
        HAVE_NUMBA = False
else:
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _disabled


def jit(func):
    """Compile ``func`` with numba when enabled, else return it unchanged."""
    if USE_NUMBA:
        return njit(cache=True)(func)
    return func
