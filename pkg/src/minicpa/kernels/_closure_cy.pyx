# cython: boundscheck=False, wraparound=False, language_level=3
"""int64 integer tight closure for octagon DBMs.

Mirrors _closure_py exactly; the dispatcher guarantees |entry| <= 2**44
and dim <= 128, so Floyd-Warshall path sums stay far below the inf
sentinel and int64 overflow.  Floor division uses Python semantics
(cdivision is off), matching the pure kernel on negative bounds.
"""

from libc.stdlib cimport free, malloc


def tight_closure_flat(object flat, Py_ssize_t n, long long inf):
    """Closure of a flat row-major n*n matrix; returns a list or None."""
    cdef long long *m = <long long *> malloc(n * n * sizeof(long long))
    if m == NULL:
        raise MemoryError()
    cdef Py_ssize_t i, j, k
    cdef long long v, ik, a, b, half_a
    try:
        for i in range(n * n):
            m[i] = flat[i]

        # Coherence.
        for i in range(n):
            for j in range(n):
                v = m[(j ^ 1) * n + (i ^ 1)]
                if v < m[i * n + j]:
                    m[i * n + j] = v
        for i in range(n):
            if m[i * n + i] < 0:
                return None
            m[i * n + i] = 0

        # Floyd-Warshall.
        for k in range(n):
            for i in range(n):
                ik = m[i * n + k]
                if ik >= inf:
                    continue
                for j in range(n):
                    if m[k * n + j] >= inf:
                        continue
                    v = ik + m[k * n + j]
                    if v < m[i * n + j]:
                        m[i * n + j] = v
        for i in range(n):
            if m[i * n + i] < 0:
                return None

        # Unary parity tightening.
        for i in range(n):
            v = m[i * n + (i ^ 1)]
            if v < inf:
                m[i * n + (i ^ 1)] = 2 * (v // 2)

        # Integer consistency of opposing unary bounds.
        for i in range(n):
            a = m[i * n + (i ^ 1)]
            b = m[(i ^ 1) * n + i]
            if a < inf and b < inf and a + b < 0:
                return None

        # Strengthening.
        for i in range(n):
            a = m[i * n + (i ^ 1)]
            if a >= inf:
                continue
            half_a = a // 2
            for j in range(n):
                b = m[(j ^ 1) * n + j]
                if b >= inf:
                    continue
                v = half_a + b // 2
                if v < m[i * n + j]:
                    m[i * n + j] = v

        return [m[i] for i in range(n * n)]
    finally:
        free(m)
