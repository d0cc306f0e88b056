"""Optional numba acceleration.

Set LISTLAB_NO_NUMBA=1 to run every kernel as plain numpy/python.
"""
import os

DISABLED = os.environ.get("LISTLAB_NO_NUMBA", "").strip() not in ("", "0")

HAS_NUMBA = False
if not DISABLED:
    try:
        import numba as _numba
        HAS_NUMBA = True
    except ImportError:
        HAS_NUMBA = False


def njit(fn=None, **kw):
    """numba.njit when available and enabled, identity otherwise."""
    def wrap(f):
        if HAS_NUMBA:
            return _numba.njit(cache=True, **kw)(f)
        return f
    if fn is None:
        return wrap
    return wrap(fn)


def backend():
    return "numba" if HAS_NUMBA else "numpy"
