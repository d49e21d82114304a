"""Numba switch.

Set ``QNDTOMO_DISABLE_NUMBA=1`` (or have numba missing) to run every hot
kernel through its pure-numpy implementation instead.
"""

import os

_truthy = {"1", "true", "yes", "on"}

try:
    import numba
except ImportError:  # pragma: no cover - numba is an optional accelerator
    numba = None

NUMBA_AVAILABLE = numba is not None

if NUMBA_AVAILABLE and "NUMBA_THREADING_LAYER" not in os.environ:
    # the system TBB is often too old for numba; prefer OpenMP
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
NUMBA_DISABLED = os.environ.get("QNDTOMO_DISABLE_NUMBA", "").strip().lower() in _truthy
USE_NUMBA = NUMBA_AVAILABLE and not NUMBA_DISABLED

numba_default = {
    "nogil": True,
    "cache": True,
    "fastmath": False,
    "error_model": "numpy",
}


def prange(*args):
    """``numba.prange`` inside compiled kernels, plain ``range`` otherwise."""
    return range(*args)


if NUMBA_AVAILABLE:
    prange = numba.prange  # noqa: F811


def njit(func=None, **overrides):
    """``numba.njit`` with the package defaults, or a no-op without numba."""
    options = dict(numba_default, **overrides)

    def wrap(f):
        if not NUMBA_AVAILABLE:
            return f
        return numba.njit(**options)(f)

    return wrap if func is None else wrap(func)
