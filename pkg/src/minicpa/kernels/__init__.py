"""DBM closure kernels.

The tight-closure loop is the cubic hot spot of the octagon domain, so
a compiled extension is used when it is importable and the matrix fits
the int64 fast path; otherwise the pure-Python kernel runs.  Both
implementations compute identical results (the test suite cross-checks
them entry for entry).
"""

from __future__ import annotations

from typing import List, Optional

from ._closure_py import INF, tight_closure_py

try:  # pragma: no cover - depends on whether the extension was built
    from . import _closure_cy

    HAVE_COMPILED = True
except ImportError:  # pragma: no cover
    _closure_cy = None
    HAVE_COMPILED = False

# int64 fast-path limits: magnitudes stay far below overflow even after
# Floyd-Warshall accumulates path sums (see _closure_cy).
_MAG_LIMIT = 1 << 44
_DIM_LIMIT = 128
_INF64 = 1 << 62


def _fits_fast_path(matrix: List[List]) -> bool:
    if len(matrix) > _DIM_LIMIT:
        return False
    for row in matrix:
        for v in row:
            if v != INF and not -_MAG_LIMIT <= v <= _MAG_LIMIT:
                return False
    return True


def tight_closure(matrix: List[List], force: Optional[str] = None) -> Optional[List[List]]:
    """Integer tight closure of a coherent-or-raw DBM.

    Input is a square matrix over signed variable forms (entries are int
    or INF).  Returns the closed matrix, or None when the constraints
    have no integer solution.  `force` pins the implementation to
    "pure" or "compiled" (tests and benchmarks use this).
    """
    use_compiled = HAVE_COMPILED and force != "pure"
    if force == "compiled" and not HAVE_COMPILED:
        raise RuntimeError("compiled closure kernel is not available")
    if use_compiled and _fits_fast_path(matrix):
        n = len(matrix)
        flat = [0] * (n * n)
        i = 0
        for row in matrix:
            for v in row:
                flat[i] = _INF64 if v == INF else int(v)
                i += 1
        out = _closure_cy.tight_closure_flat(flat, n, _INF64)
        if out is None:
            return None
        return [
            [INF if v >= _INF64 else v for v in out[r * n : (r + 1) * n]]
            for r in range(n)
        ]
    return tight_closure_py(matrix)
