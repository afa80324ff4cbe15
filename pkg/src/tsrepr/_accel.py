"""Numba toggle.

Hot loops are written twice: a numba kernel and a pure-numpy path. The
numba path is used when numba imports and ``TSREPR_DISABLE_NUMBA`` is unset
(or ``0``). Set ``TSREPR_DISABLE_NUMBA=1`` to force the numpy path.
"""
import os
import warnings

_flag = os.environ.get("TSREPR_DISABLE_NUMBA", "0").strip().lower()
_disabled = _flag not in ("", "0", "false", "no")

try:
    from numba import njit as _njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False
    _njit = None

USE_NUMBA = HAVE_NUMBA and not _disabled

if not HAVE_NUMBA and not _disabled:  # pragma: no cover
    warnings.warn("numba not available; falling back to numpy kernels")


def njit(func):
    """Compile ``func`` with numba when available, else return it unchanged."""
    if HAVE_NUMBA:
        return _njit(cache=True, nogil=True)(func)
    return func


def backend():
    return "numba" if USE_NUMBA else "numpy"
