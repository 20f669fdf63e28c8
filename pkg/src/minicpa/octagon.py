"""Octagon analysis over difference-bound matrices.

A state is a DBM over signed variable forms (+v at index 2v, -v at
2v+1); entry (i, j) bounds s_i - s_j from above.  States are kept
tightly closed after every operation.  Assumes tighten by the
octagonal atoms of the condition (everything else is ignored, which
over-approximates soundly); assignments of the form x := c and
x := +/-y + c are exact and all other right-hand sides havoc the
target.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .ast import Nondet
from .cfa import Assign, Assume, Call, CfaEdge, Location, Program, Return, Skip, RETURN_SLOT
from .cpa import Cpa
from .errors import BlowupError, NonlinearError
from .kernels import INF, tight_closure
from .solver import EQ, LE, LinearConstraint, linearize, normalize_condition


@dataclass(frozen=True)
class OctagonState:
    """Tightly closed DBM, or the distinguished bottom (rows=None)."""

    rows: Optional[Tuple[Tuple, ...]]

    @property
    def is_bottom(self) -> bool:
        return self.rows is None

    def matrix(self) -> List[List]:
        return [list(r) for r in self.rows]

    def bound(self, i: int, j: int):
        return self.rows[i][j]

    def __repr__(self):
        if self.is_bottom:
            return "octagon(bottom)"
        finite = sum(1 for row in self.rows for v in row if v != INF)
        return f"octagon({len(self.rows) // 2} vars, {finite} bounds)"


OCTAGON_BOTTOM = OctagonState(None)


def _freeze(matrix: Sequence[Sequence]) -> OctagonState:
    return OctagonState(tuple(tuple(row) for row in matrix))


def top_state(num_vars: int) -> OctagonState:
    n = 2 * num_vars
    rows = tuple(tuple(0 if i == j else INF for j in range(n)) for i in range(n))
    return OctagonState(rows)


def close(matrix: Sequence[Sequence]) -> OctagonState:
    closed = tight_closure([list(r) for r in matrix])
    if closed is None:
        return OCTAGON_BOTTOM
    return _freeze(closed)


@dataclass(frozen=True)
class OctagonalAtom:
    """sign_a * a + sign_b * b <= bound (single-variable if b is None)."""

    var_a: str
    sign_a: int
    var_b: Optional[str]
    sign_b: int
    bound: int


def octagonal_atoms(constraint: LinearConstraint) -> List[OctagonalAtom]:
    """Octagonal readings of a linear constraint (both directions for
    equalities); empty when the constraint is not octagonal."""

    def of_le(term) -> List[OctagonalAtom]:
        coeffs = term.coeff_map()
        if len(coeffs) == 1:
            (v, a), = coeffs.items()
            # a*v + c <= 0  =>  sign(a)*v <= floor(-c / |a|)
            sign = 1 if a > 0 else -1
            return [OctagonalAtom(v, sign, None, 0, (-term.constant) // abs(a))]
        if len(coeffs) == 2:
            (va, a), (vb, b) = sorted(coeffs.items())
            from math import gcd

            g = gcd(abs(a), abs(b))
            if abs(a) // g != 1 or abs(b) // g != 1:
                return []
            sa = 1 if a > 0 else -1
            sb = 1 if b > 0 else -1
            return [OctagonalAtom(va, sa, vb, sb, (-term.constant) // g)]
        return []

    if constraint.relation == LE:
        return of_le(constraint.term)
    if constraint.relation == EQ:
        return of_le(constraint.term) + of_le(constraint.term.negate())
    return []


class OctagonCpa(Cpa):
    name = "octagon"

    def __init__(self, program: Optional[Program] = None, variables: Optional[Sequence[str]] = None):
        if variables is None:
            variables = program.variables if program is not None else ()
        self.variables: Tuple[str, ...] = tuple(variables)
        self.index: Dict[str, int] = {v: i for i, v in enumerate(self.variables)}
        self.program = program

    # -- lattice -----------------------------------------------------------

    def initial_state(self, entry: Location) -> OctagonState:
        return top_state(len(self.variables))

    def less_or_equal(self, a: OctagonState, b: OctagonState) -> bool:
        if a.is_bottom:
            return True
        if b.is_bottom:
            return False
        return all(x <= y for ra, rb in zip(a.rows, b.rows) for x, y in zip(ra, rb))

    def join(self, a: OctagonState, b: OctagonState) -> OctagonState:
        if a.is_bottom:
            return b
        if b.is_bottom:
            return a
        widened = [
            [max(x, y) for x, y in zip(ra, rb)] for ra, rb in zip(a.rows, b.rows)
        ]
        return close(widened)

    def merge(self, s1: OctagonState, s2: OctagonState, precision) -> OctagonState:
        # Join at equal locations: keeps loop exploration from piling up
        # one state per iteration count.
        return self.join(s1, s2)

    # -- matrix edits --------------------------------------------------------

    def _pos(self, var: str, sign: int) -> int:
        v = self.index[var]
        return 2 * v if sign > 0 else 2 * v + 1

    def _set_bound(self, m: List[List], i: int, j: int, c) -> None:
        if c < m[i][j]:
            m[i][j] = c
        if c < m[j ^ 1][i ^ 1]:
            m[j ^ 1][i ^ 1] = c

    def _apply_atom(self, m: List[List], atom: OctagonalAtom) -> None:
        """Tighten by one octagonal atom; unknown variables are ignored
        (sound over-approximation)."""
        if atom.var_a not in self.index:
            return
        if atom.var_b is not None and atom.var_b not in self.index:
            return
        if atom.var_b is None:
            i = self._pos(atom.var_a, atom.sign_a)
            self._set_bound(m, i, i ^ 1, 2 * atom.bound)
        else:
            # Distinct variables: linearization merges repeated names.
            i = self._pos(atom.var_a, atom.sign_a)
            j = self._pos(atom.var_b, -atom.sign_b)
            self._set_bound(m, i, j, atom.bound)

    def _forget(self, m: List[List], var: str) -> None:
        p = 2 * self.index[var]
        n = len(m)
        for q in range(n):
            if q not in (p, p + 1):
                m[p][q] = INF
                m[q][p] = INF
                m[p + 1][q] = INF
                m[q][p + 1] = INF
        m[p][p + 1] = INF
        m[p + 1][p] = INF
        m[p][p] = 0
        m[p + 1][p + 1] = 0

    def _shift(self, m: List[List], var: str, c: int) -> None:
        """Exact update for var := var + c (bounds move with the value)."""
        p = 2 * self.index[var]
        n = len(m)
        for q in range(n):
            if m[p][q] != INF and q != p:
                m[p][q] += c
            if m[q][p] != INF and q != p:
                m[q][p] -= c
        for q in range(n):
            if m[p + 1][q] != INF and q != p + 1:
                m[p + 1][q] -= c
            if m[q][p + 1] != INF and q != p + 1:
                m[q][p + 1] += c

    def _negate_swap(self, m: List[List], var: str) -> None:
        """Exact update for var := -var (swap the signed forms)."""
        p = 2 * self.index[var]
        n = len(m)
        for q in range(n):
            m[p][q], m[p + 1][q] = m[p + 1][q], m[p][q]
        for q in range(n):
            m[q][p], m[q][p + 1] = m[q][p + 1], m[q][p]

    # -- transfer --------------------------------------------------------------

    def transfer(self, state: OctagonState, edge: CfaEdge, precision) -> Tuple[OctagonState, ...]:
        op = edge.op
        if isinstance(op, Skip):
            return (state,)
        if isinstance(op, Assume):
            return self._transfer_assume(state, op)
        if isinstance(op, Assign):
            return self._transfer_assign(state, op.lhs, op.rhs)
        if isinstance(op, Call):
            out = state
            for formal, actual in zip(self.program.formals[op.callee], op.args):
                results = self._transfer_assign(out, formal, actual)
                if not results:
                    return ()
                out = results[0]
            return (out,)
        if isinstance(op, Return):
            if op.value is not None:
                results = self._transfer_assign(state, RETURN_SLOT, op.value)
                if not results:
                    return ()
                state = results[0]
            else:
                m = state.matrix()
                self._forget(m, RETURN_SLOT)
                state = _freeze(m)
            m = state.matrix()
            prefix = edge.source.function + "::"
            for v in self.variables:
                if v.startswith(prefix):
                    self._forget(m, v)
            return (_freeze(m),)
        raise TypeError(f"unknown edge operation {op!r}")

    def _transfer_assume(self, state: OctagonState, op: Assume) -> Tuple[OctagonState, ...]:
        try:
            branches = normalize_condition(op.cond)
        except (BlowupError, NonlinearError):
            return (state,)
        results: List[OctagonState] = []
        for branch in branches:
            m = state.matrix()
            consistent = True
            for constraint in branch:
                if not constraint.term.coeffs:
                    # Constant atom: decide it outright.
                    k = constraint.term.constant
                    falsified = k > 0 if constraint.relation == LE else k != 0
                    if falsified:
                        consistent = False
                        break
                    continue
                for atom in octagonal_atoms(constraint):
                    self._apply_atom(m, atom)
            if not consistent:
                continue
            closed = close(m)
            if not closed.is_bottom and closed not in results:
                results.append(closed)
        return tuple(results)

    def _transfer_assign(self, state: OctagonState, lhs: str, rhs) -> Tuple[OctagonState, ...]:
        if isinstance(rhs, Nondet):
            m = state.matrix()
            self._forget(m, lhs)
            return (_freeze(m),)
        try:
            term = linearize(rhs)
        except NonlinearError:
            m = state.matrix()
            self._forget(m, lhs)
            return (_freeze(m),)
        coeffs = term.coeff_map()
        m = state.matrix()
        if not coeffs:
            self._forget(m, lhs)
            p = 2 * self.index[lhs]
            self._set_bound(m, p, p ^ 1, 2 * term.constant)
            self._set_bound(m, p ^ 1, p, -2 * term.constant)
            return (close(m),)
        if len(coeffs) == 1:
            (y, a), = coeffs.items()
            if a == 1 and y == lhs:
                self._shift(m, lhs, term.constant)
                return (_freeze(m),)
            if a == -1 and y == lhs:
                self._negate_swap(m, lhs)
                self._shift(m, lhs, term.constant)
                return (_freeze(m),)
            if a in (1, -1):
                self._forget(m, lhs)
                p = self._pos(lhs, 1)
                q = self._pos(y, a)  # +y when a == 1, -y when a == -1
                # lhs - a*y <= c and a*y - lhs <= -c
                self._set_bound(m, p, q, term.constant)
                self._set_bound(m, q, p, -term.constant)
                return (close(m),)
        self._forget(m, lhs)
        return (_freeze(m),)
