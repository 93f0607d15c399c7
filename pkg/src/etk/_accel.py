"""Numba switch.

Set ``ETK_DISABLE_NUMBA=1`` to run every hot kernel on the pure-numpy path.
The flag is read once, at import time.
"""
import os

_FALSY = {"", "0", "false", "no", "off"}


def _numba_requested():
    return os.environ.get("ETK_DISABLE_NUMBA", "").strip().lower() in _FALSY


try:
    if not _numba_requested():
        raise ImportError
    import numba
except ImportError:
    numba = None

USE_NUMBA = numba is not None


def njit(*args, **kwargs):
    """``numba.njit`` when enabled, otherwise a no-op decorator."""
    if USE_NUMBA:
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f
