"""Numba switch.

Set ``SNAKEWALK_DISABLE_NUMBA=1`` before import to force the pure-numpy
kernels. The flag is read once.
"""
import os

_FLAG = os.environ.get("SNAKEWALK_DISABLE_NUMBA", "").strip().lower()

try:
    import numba
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _FLAG not in ("1", "true", "yes", "on")


def njit(func):
    """Compile with numba when available, otherwise return ``func`` untouched."""
    if HAVE_NUMBA:
        return numba.njit(cache=True)(func)
    return func


def backend():
    return "numba" if USE_NUMBA else "numpy"
