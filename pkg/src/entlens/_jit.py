"""Numba acceleration shim.

Hot kernels (mode ODE integration, series evaluation, geodesic shooting) are
plain Python functions over scalars and numpy arrays, compiled with numba
when it is available.  Setting ENTLENS_NO_NUMBA=1 disables compilation so
the identical code runs as pure Python/NumPy: much slower, but useful for
debugging and on platforms without a working numba.  benchmarks/ compares
the two paths.
"""

import os

NUMBA_DISABLED = os.environ.get("ENTLENS_NO_NUMBA", "") not in ("", "0")

if not NUMBA_DISABLED:
    try:
        from numba import njit as _njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        _njit = None
else:
    _njit = None

NUMBA_ENABLED = _njit is not None


def jit(func=None, **kwargs):
    """njit with cache+nogil defaults, or a no-op when numba is disabled."""
    if not NUMBA_ENABLED:
        if func is None:
            return lambda f: f
        return func
    kwargs.setdefault("cache", True)
    kwargs.setdefault("nogil", True)
    if func is None:
        return lambda f: _njit(**kwargs)(f)
    return _njit(**kwargs)(func)
