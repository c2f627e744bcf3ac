"""Backend selection for the numeric kernels.

Hot loops live in :mod:`apf_rcbf._kernels` and are compiled with numba by
default.  Setting the environment variable ``APF_RCBF_NUMBA=0`` before import
switches the whole package to the plain-numpy interpretation of the exact same
functions, which is handy on platforms without a working numba install and for
line-by-line debugging.  The selected backend is reported in ``BACKEND``.
"""

from __future__ import annotations

import os

_flag = os.environ.get("APF_RCBF_NUMBA", "1").strip().lower()
_want_numba = _flag not in ("0", "false", "no", "off")

_numba_error: str | None = None

if _want_numba:
    try:
        import numba

        BACKEND = "numba"
    except ImportError as exc:  # pragma: no cover - exercised via env flag
        numba = None
        BACKEND = "numpy"
        _numba_error = str(exc)
else:
    numba = None
    BACKEND = "numpy"


def jit_kernel(func):
    """Compile *func* with ``numba.njit`` or return it unchanged.

    Compiled kernels keep the original Python function reachable through the
    standard ``.py_func`` attribute; on the numpy backend the function itself
    is its own ``py_func`` so callers can treat both backends uniformly.
    """
    if BACKEND == "numba":
        return numba.njit(cache=True)(func)
    func.py_func = func
    return func
