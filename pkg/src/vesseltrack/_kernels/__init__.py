"""Hot numeric kernels with two interchangeable backends.

The numba backend JIT-compiles the loops; the numpy backend is a pure
vectorized fallback.  Selection happens once at import time:

* ``VESSELTRACK_NUMBA=0`` (also ``false``/``no``/``off``) forces the numpy
  fallback,
* otherwise numba is used when importable, numpy when not.

Both backends implement the same functions with identical semantics:
``dtw_accumulate``, ``block_match`` and ``thin``.
"""

import os

_flag = os.environ.get("VESSELTRACK_NUMBA", "1").strip().lower()
_want_numba = _flag not in ("0", "false", "no", "off")

if _want_numba:
    try:
        from . import _numba_impl as _impl

        BACKEND = "numba"
    except ImportError:
        from . import _numpy_impl as _impl

        BACKEND = "numpy"
else:
    from . import _numpy_impl as _impl

    BACKEND = "numpy"

dtw_accumulate = _impl.dtw_accumulate
block_match = _impl.block_match
thin = _impl.thin


def backend() -> str:
    """Name of the active kernel backend, ``"numba"`` or ``"numpy"``."""
    return BACKEND
