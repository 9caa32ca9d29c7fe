"""Backend selection for the hot kernels.

The sampler's per-element inner loops (admissible-index scans and
truncated categorical draws) run as numba @njit kernels by default.  Set
``HDPSLICE_DISABLE_NUMBA=1`` to select the vectorized pure-numpy path
instead; the same path is used automatically when numba is unavailable.
Both backends produce the same draws from the same inputs.

``benchmarks/bench_accel.py`` compares the two.
"""

import os

from . import _loops, _vectorized

_flag = os.environ.get("HDPSLICE_DISABLE_NUMBA", "").strip()
_want_numba = _flag in ("", "0")


def numpy_kernels():
    """The vectorized numpy implementations, regardless of backend."""
    return _vectorized.last_admissible, _vectorized.categorical_rows


def numba_kernels():
    """JIT-compiled loop implementations; raises if numba is missing."""
    import numba

    la = numba.njit("i8[:](f8[:], f8[:])", cache=True)(_loops.last_admissible)
    cr = numba.njit("i8[:](f8[:, :], i8[:], f8[:])", cache=True)(_loops.categorical_rows)
    return la, cr


if _want_numba:
    try:
        last_admissible, categorical_rows = numba_kernels()
        BACKEND = "numba"
    except ImportError:
        last_admissible, categorical_rows = numpy_kernels()
        BACKEND = "numpy"
else:
    last_admissible, categorical_rows = numpy_kernels()
    BACKEND = "numpy"
