"""Kernel backend selection.

The hot loops ship in two interchangeable implementations:

* ``kernels_numba`` -- @njit(parallel=True) versions (default),
* ``kernels_numpy`` -- pure-numpy reference versions.

Set ``KINETIC_GAP_BACKEND=numpy`` before import to force the fallback (also
used automatically when numba is not importable).  ``scripts/benchmark_backends.py``
compares the two.
"""

import os

_requested = os.environ.get("KINETIC_GAP_BACKEND", "numba").strip().lower()

if _requested not in ("numba", "numpy"):
    raise RuntimeError(
        f"KINETIC_GAP_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

if _requested == "numba":
    try:
        from . import kernels_numba as kernels
        BACKEND = "numba"
    except ImportError:
        from . import kernels_numpy as kernels
        BACKEND = "numpy"
else:
    from . import kernels_numpy as kernels
    BACKEND = "numpy"


def backend_name() -> str:
    return BACKEND
