"""Kernel lane selection.

Two interchangeable implementations of the hot time-stepping loops exist:

* ``_kernels_numba``: JIT-compiled, used by default.
* ``_kernels_np``: pure NumPy/SciPy, used when the environment variable
  ``BURGERS_CONTROL_DISABLE_NUMBA`` is set to 1/true/yes, or when numba
  cannot be imported.

The active lane is fixed at import time and exposed as ``BACKEND``.
"""
from __future__ import annotations

import os

_FLAG = os.environ.get("BURGERS_CONTROL_DISABLE_NUMBA", "").strip().lower()
_DISABLED = _FLAG in ("1", "true", "yes", "on")

if _DISABLED:
    from . import _kernels_np as _impl

    BACKEND = "numpy"
else:
    try:
        from . import _kernels_numba as _impl

        BACKEND = "numba"
    except ImportError:
        from . import _kernels_np as _impl

        BACKEND = "numpy"

OK = _impl.OK
NEWTON_FAIL = _impl.NEWTON_FAIL
NONFINITE = _impl.NONFINITE
SINGULAR = _impl.SINGULAR

thomas_solve = _impl.thomas_solve
burgers_integrate = _impl.burgers_integrate
linear_integrate = _impl.linear_integrate
advective_integrate = _impl.advective_integrate


def backend() -> str:
    """Name of the active kernel lane ('numba' or 'numpy')."""
    return BACKEND
