"""Numba switch.

Hot kernels are written once as plain Python/numpy and compiled with
``numba.njit`` when numba is importable and ``HUBPLAN_DISABLE_NUMBA`` is not
set to a truthy value.  The uncompiled originals stay importable so the two
paths can be compared against each other.
"""

from __future__ import annotations

import os

_FALSY = ("", "0", "false", "no", "off")


def numba_requested() -> bool:
    return os.environ.get("HUBPLAN_DISABLE_NUMBA", "").strip().lower() in _FALSY


try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None

NUMBA_AVAILABLE = _numba is not None
USE_NUMBA = NUMBA_AVAILABLE and numba_requested()


def njit(func):
    """Compile ``func`` in nopython mode if enabled, else return it unchanged."""
    if not USE_NUMBA:
        return func
    return _numba.njit(cache=True, nogil=True)(func)


def compile_always(func):
    """Compile regardless of the env flag (used by benchmarks and tests)."""
    if not NUMBA_AVAILABLE:
        return func
    return _numba.njit(cache=True, nogil=True)(func)
