"""Pure-Python integer tight closure for octagon DBMs.

Entries are exact ints with float("inf") as the missing-bound marker;
arithmetic never overflows.  Matrix rows/columns come in signed pairs:
index 2v is +v, index 2v+1 is -v, and i ^ 1 flips the sign of index i.

Steps: coherence normalization, all-pairs shortest paths, unary parity
tightening (a bound on 2v rounds down to the nearest even value), the
integer-consistency check on opposing unary bounds, and one final
strengthening pass combining unary half-bounds.
"""

from __future__ import annotations

from typing import List, Optional

INF = float("inf")


def tight_closure_py(matrix: List[List]) -> Optional[List[List]]:
    n = len(matrix)
    m = [list(row) for row in matrix]

    # Coherence: an entry and its sign-mirror encode the same constraint.
    for i in range(n):
        for j in range(n):
            v = m[j ^ 1][i ^ 1]
            if v < m[i][j]:
                m[i][j] = v
    for i in range(n):
        if m[i][i] < 0:
            return None
        m[i][i] = 0

    # Floyd-Warshall.
    for k in range(n):
        row_k = m[k]
        for i in range(n):
            ik = m[i][k]
            if ik == INF:
                continue
            row_i = m[i]
            for j in range(n):
                v = ik + row_k[j]
                if v < row_i[j]:
                    row_i[j] = v
    for i in range(n):
        if m[i][i] < 0:
            return None

    # Unary parity: m[i][i^1] bounds 2*v, so odd bounds tighten down.
    for i in range(n):
        v = m[i][i ^ 1]
        if v != INF:
            m[i][i ^ 1] = 2 * (v // 2)

    # Integer consistency: opposing tightened unary bounds must agree.
    for i in range(n):
        a = m[i][i ^ 1]
        b = m[i ^ 1][i]
        if a != INF and b != INF and a + b < 0:
            return None

    # Strengthening: combine half unary bounds.
    for i in range(n):
        a = m[i][i ^ 1]
        if a == INF:
            continue
        half_a = a // 2
        for j in range(n):
            b = m[j ^ 1][j]
            if b == INF:
                continue
            v = half_a + b // 2
            if v < m[i][j]:
                m[i][j] = v
    return m
