"""Kernel backend selection.

Hot loops are compiled with numba when it is importable. Setting
``GANBAL_DISABLE_NUMBA=1`` forces the pure-numpy implementations, which is
also what happens automatically if numba is missing.
"""
import os

_flag = os.environ.get("GANBAL_DISABLE_NUMBA", "").strip().lower()
DISABLED = _flag in ("1", "true", "yes", "on")

try:
    if DISABLED:
        raise ImportError
    from numba import njit
    HAS_NUMBA = True
except ImportError:
    njit = None
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and not DISABLED


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
