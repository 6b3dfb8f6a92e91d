"""Backend selection for the hot numerical kernels.

By default the kernels in :mod:`kerrshadow._kernels` are compiled with
numba. Setting the environment variable ``KERRSHADOW_PURE_NUMPY`` to a
truthy value (``1``, ``true``, ``yes``) before import selects the pure
NumPy fallback: the same functions run uncompiled, which is slow but has
no dependency on a working numba installation. ``benchmarks/compare_backends.py``
measures the gap.
"""

from __future__ import annotations

import os

_FLAG = os.environ.get("KERRSHADOW_PURE_NUMPY", "").strip().lower()
USE_NUMBA = _FLAG not in ("1", "true", "yes", "on")

if USE_NUMBA:
    try:
        from numba import njit, prange
    except ImportError:  # pragma: no cover - numba is a declared dependency
        USE_NUMBA = False

if not USE_NUMBA:
    def njit(*args, **kwargs):  # noqa: D103 - identity decorator
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(func):
            return func

        return wrap

    prange = range


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
