"""Numba switch.

Kernels are compiled with numba when it is importable. Setting
``NLHVLAB_DISABLE_NUMBA=1`` in the environment forces the pure-numpy path,
which produces identical integer tallies for identical random inputs.
"""
import os

ENV_FLAG = "NLHVLAB_DISABLE_NUMBA"

DISABLED = os.environ.get(ENV_FLAG, "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if DISABLED:
        raise ImportError(f"numba disabled via {ENV_FLAG}")
    from numba import njit
    HAVE_NUMBA = True
except ImportError:
    njit = None
    HAVE_NUMBA = False


def backend():
    return "numba" if HAVE_NUMBA else "numpy"
