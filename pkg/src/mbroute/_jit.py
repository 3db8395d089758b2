"""Switch between numba-compiled kernels and the plain numpy path.

Set ``MBR_DISABLE_NUMBA=1`` before import to force the numpy fallback.
"""
import os

NUMBA_ENABLED = os.environ.get("MBR_DISABLE_NUMBA", "").strip().lower() in ("", "0", "false", "no")

if NUMBA_ENABLED:
    try:
        import numba
    except ImportError:  # pragma: no cover - numba is a declared dependency
        NUMBA_ENABLED = False


def njit(fn):
    """``numba.njit(cache=True)`` when enabled, identity otherwise."""
    if NUMBA_ENABLED:
        return numba.njit(cache=True)(fn)
    return fn
