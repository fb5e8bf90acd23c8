"""Switch between numba-compiled kernels and the plain Python path.

Set ``KLEINX_NUMBA=0`` before import to run every kernel uncompiled.
"""
import os

_flag = os.environ.get("KLEINX_NUMBA", "1").strip().lower()
USE_NUMBA = _flag not in ("0", "false", "no", "off")

if USE_NUMBA:
    try:
        import numba
    except ImportError:  # pragma: no cover
        USE_NUMBA = False


def kernel(fn):
    """Compile ``fn`` with ``numba.njit`` when acceleration is on."""
    if USE_NUMBA:
        return numba.njit(cache=True)(fn)
    return fn


def is_compiled(fn):
    return USE_NUMBA and hasattr(fn, "py_func")


def python_version(fn):
    return getattr(fn, "py_func", fn)
