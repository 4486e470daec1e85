"""Select the simplex kernel at import time.

The compiled ``_simplex_ext`` is used when it was built; ``CUTLAB_PURE_PYTHON=1``
forces the pure-Python kernel.  Both take the same pivot path, so results are
identical; only speed differs.
"""

import os

import numpy as np

from . import _simplex_py
from ._simplex_py import INFEASIBLE, OPTIMAL, OVERFLOW, UNBOUNDED  # noqa: F401

_ext = None
if os.environ.get("CUTLAB_PURE_PYTHON") != "1":
    try:
        from . import _simplex_ext as _ext
    except ImportError:  # extension not built
        _ext = None

BACKEND = "cython" if _ext is not None else "python"
_LIMIT = 1 << 62


def run(rows, basis, nreal, backend=None):
    """Run the two-phase simplex on ``rows`` (lists of Python ints).

    Returns ``(status, d, tableau, basis)``; ``tableau`` supports ``t[i][j]``.
    """
    use = backend or BACKEND
    if use == "cython" and _ext is not None:
        if all(-_LIMIT <= v <= _LIMIT for row in rows for v in row):
            N = np.array(rows, dtype=np.int64)
            bas = np.array(basis, dtype=np.int64)
            status, d = _ext.run_simplex(N, bas, nreal)
            if status != OVERFLOW:
                return status, d, N.tolist(), bas.tolist()
    N = [list(r) for r in rows]
    bas = list(basis)
    status, d = _simplex_py.run_simplex(N, bas, nreal)
    return status, d, N, bas
