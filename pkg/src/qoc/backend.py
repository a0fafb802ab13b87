"""Kernel backend selection.

Set QOC_BACKEND=numpy to force the pure-numpy kernels, QOC_BACKEND=numba to
require the compiled ones. Unset, numba is used when importable and numpy
otherwise. Both backends expose identical functions; see
benchmarks/bench_kernels.py for a speed comparison.
"""
from __future__ import annotations

import os
import warnings

_requested = os.environ.get("QOC_BACKEND", "").strip().lower()
if _requested not in ("", "numba", "numpy"):
    raise ValueError(f"QOC_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

if _requested == "numpy":
    from . import _kernels_numpy as kernels

    BACKEND = "numpy"
else:
    try:
        from . import _kernels_numba as kernels

        BACKEND = "numba"
    except ImportError:
        if _requested == "numba":
            raise
        warnings.warn("numba unavailable, falling back to numpy kernels")
        from . import _kernels_numpy as kernels

        BACKEND = "numpy"
