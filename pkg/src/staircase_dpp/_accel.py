"""Optional numba acceleration.

Hot loops come in two flavours: a numba ``@njit`` kernel and a plain numpy
version.  Set ``STAIRCASE_DPP_NO_NUMBA=1`` in the environment (before import)
to force the numpy versions, e.g. to compare results or timings.
"""
import os

try:
    import numba as _nb
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _nb = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("STAIRCASE_DPP_NO_NUMBA", "") not in ("1", "true", "yes")


def njit(*args, **kwargs):
    """numba.njit(cache=True) when enabled, otherwise the identity decorator."""
    if USE_NUMBA:
        kwargs.setdefault("cache", True)
        return _nb.njit(*args, **kwargs)
    if args and callable(args[0]):
        return args[0]
    return lambda f: f


def backend():
    return "numba" if USE_NUMBA else "numpy"
