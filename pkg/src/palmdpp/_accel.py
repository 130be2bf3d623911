"""Numba toggle.

The sequential sampling cores in ``_kernels`` are compiled with numba by
default. Setting the environment variable ``PALMDPP_NO_NUMBA=1`` before
import selects the pure-numpy implementations instead (same algorithm, same
random-number consumption, so outputs are identical). The flag is read once
at import time.
"""
import os

_flag = os.environ.get("PALMDPP_NO_NUMBA", "0").strip().lower()
NUMBA_DISABLED = _flag not in ("", "0", "false", "no")

if not NUMBA_DISABLED:
    try:
        from numba import njit as _njit
        NUMBA_ACTIVE = True
    except ImportError:  # pragma: no cover - numba is a hard dependency
        NUMBA_ACTIVE = False
else:
    NUMBA_ACTIVE = False


def accelerate(fn):
    """Return an njit-compiled version of fn, or fn itself when disabled."""
    if NUMBA_ACTIVE:
        return _njit(cache=True, nogil=True)(fn)
    return fn
