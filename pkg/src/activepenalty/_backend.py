"""Kernel backend selection.

The hot loops in :mod:`activepenalty.kernels` exist twice: once as numba
``@njit`` functions and once as vectorised numpy. ``ACTIVEPENALTY_BACKEND``
picks one at import time (``numba`` or ``numpy``). The default is numba when
it can be imported, numpy otherwise.
"""
import os

_requested = os.environ.get("ACTIVEPENALTY_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ValueError(
        f"ACTIVEPENALTY_BACKEND must be 'numba' or 'numpy', got {_requested!r}"
    )

try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    HAVE_NUMBA = False

BACKEND = "numba" if (_requested == "numba" and HAVE_NUMBA) else "numpy"


def njit(*args, **kwargs):
    """``numba.njit`` with caching on, or an identity decorator without numba."""
    if HAVE_NUMBA:
        from numba import njit as _njit

        kwargs.setdefault("cache", True)
        return _njit(*args, **kwargs)

    def wrap(fn):
        return fn

    if args and callable(args[0]):
        return args[0]
    return wrap
