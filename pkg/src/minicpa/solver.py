"""Linear integer-arithmetic decision procedures.

Conjunctions of linear constraints over integer variables are decided
for *rational* satisfiability by Fourier-Motzkin elimination with exact
Fraction arithmetic (equalities are substituted away first).  Rational
infeasibility is sound for the integer semantics; the converse gap
(e.g. 2x = 1) is exposed by integer_witness and reported as RELAXED by
callers.  Strict and negated source atoms are integer-tightened during
normalization (t < 0 becomes t + 1 <= 0), which is valid because MiniC
variables are mathematical integers.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import ceil, floor, gcd, inf
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from .ast import And, BinOp, Cmp, Expr, IntLiteral, Not, Nondet, Or, Var, to_nnf
from .errors import BlowupError, BoxTooLargeError, NonlinearError

DEFAULT_CONSTRAINT_CAP = 50_000
WITNESS_POINT_CAP = 10_000_000

LE = "<=0"
EQ = "==0"
NE = "!=0"


@dataclass(frozen=True, order=True)
class LinearTerm:
    """Sum of integer-coefficient variables plus a constant.

    Coefficients are stored sorted by variable name with zeros removed,
    so equal terms compare equal structurally.
    """

    coeffs: Tuple[Tuple[str, int], ...]
    constant: int = 0

    @staticmethod
    def make(coeffs: Dict[str, int], constant: int = 0) -> "LinearTerm":
        items = tuple(sorted((v, c) for v, c in coeffs.items() if c != 0))
        return LinearTerm(items, constant)

    def coeff_map(self) -> Dict[str, int]:
        return dict(self.coeffs)

    def variables(self) -> Tuple[str, ...]:
        return tuple(v for v, _ in self.coeffs)

    def add(self, other: "LinearTerm") -> "LinearTerm":
        out = self.coeff_map()
        for v, c in other.coeffs:
            out[v] = out.get(v, 0) + c
        return LinearTerm.make(out, self.constant + other.constant)

    def scale(self, k: int) -> "LinearTerm":
        return LinearTerm.make({v: c * k for v, c in self.coeffs}, self.constant * k)

    def negate(self) -> "LinearTerm":
        return self.scale(-1)

    def shift(self, delta: int) -> "LinearTerm":
        return LinearTerm(self.coeffs, self.constant + delta)

    def rename(self, mapping: Dict[str, str]) -> "LinearTerm":
        out: Dict[str, int] = {}
        for v, c in self.coeffs:
            nv = mapping.get(v, v)
            out[nv] = out.get(nv, 0) + c
        return LinearTerm.make(out, self.constant)

    def evaluate(self, assignment: Dict[str, Fraction]) -> Fraction:
        total = Fraction(self.constant)
        for v, c in self.coeffs:
            total += c * assignment[v]
        return total

    def format(self) -> str:
        parts: List[str] = []
        for v, c in self.coeffs:
            if c == 1:
                parts.append(f"+ {v}" if parts else v)
            elif c == -1:
                parts.append(f"- {v}" if parts else f"-{v}")
            elif c < 0:
                parts.append(f"- {-c}*{v}" if parts else f"{c}*{v}")
            else:
                parts.append(f"+ {c}*{v}" if parts else f"{c}*{v}")
        if self.constant or not parts:
            k = self.constant
            parts.append((f"+ {k}" if k >= 0 else f"- {-k}") if parts else str(k))
        return " ".join(parts)


@dataclass(frozen=True, order=True)
class LinearConstraint:
    """term <relation> 0 with relation one of <=0, ==0, !=0."""

    term: LinearTerm
    relation: str = LE

    def format(self) -> str:
        rel = {LE: "<=", EQ: "==", NE: "!="}[self.relation]
        return f"{self.term.format()} {rel} 0"

    def variables(self) -> Tuple[str, ...]:
        return self.term.variables()

    def rename(self, mapping: Dict[str, str]) -> "LinearConstraint":
        return LinearConstraint(self.term.rename(mapping), self.relation)

    def canonical(self) -> "LinearConstraint":
        """gcd-reduced form; <= constants are floor-tightened (integer
        semantics), == constants keep exact divisibility."""
        coeffs = self.term.coeff_map()
        if not coeffs:
            return self
        g = 0
        for c in coeffs.values():
            g = gcd(g, abs(c))
        if g <= 1:
            return self
        k = self.term.constant
        if self.relation == LE:
            new = LinearTerm.make({v: c // g for v, c in coeffs.items()}, -((-k) // g))
            return LinearConstraint(new, LE)
        if k % g == 0:
            new = LinearTerm.make({v: c // g for v, c in coeffs.items()}, k // g)
            return LinearConstraint(new, self.relation)
        return self

    def satisfied_by(self, assignment: Dict[str, Fraction]) -> bool:
        value = self.term.evaluate(assignment)
        if self.relation == LE:
            return value <= 0
        if self.relation == EQ:
            return value == 0
        return value != 0


class Conjunction:
    """Duplicate-free, deterministically ordered set of constraints."""

    __slots__ = ("constraints",)

    def __init__(self, constraints: Iterable[LinearConstraint] = ()):
        seen = {}
        for c in constraints:
            seen[c] = None
        self.constraints: Tuple[LinearConstraint, ...] = tuple(
            sorted(seen, key=lambda c: (c.relation, c.term.coeffs, c.term.constant))
        )

    def __iter__(self):
        return iter(self.constraints)

    def __len__(self):
        return len(self.constraints)

    def __eq__(self, other):
        return isinstance(other, Conjunction) and self.constraints == other.constraints

    def __hash__(self):
        return hash(self.constraints)

    def __repr__(self):
        return "{" + ", ".join(c.format() for c in self.constraints) + "}"

    def and_also(self, extra: Iterable[LinearConstraint]) -> "Conjunction":
        return Conjunction(self.constraints + tuple(extra))

    def variables(self) -> Tuple[str, ...]:
        out = []
        for c in self.constraints:
            out.extend(c.variables())
        return tuple(sorted(set(out)))


@dataclass(frozen=True)
class Model:
    assignment: Tuple[Tuple[str, Fraction], ...]

    @staticmethod
    def make(values: Dict[str, Fraction]) -> "Model":
        return Model(tuple(sorted(values.items())))

    def as_dict(self) -> Dict[str, Fraction]:
        return dict(self.assignment)

    def satisfies(self, conjunction: Conjunction) -> bool:
        values = self.as_dict()
        for v in conjunction.variables():
            if v not in values:
                return False
        return all(c.satisfied_by(values) for c in conjunction)


@dataclass(frozen=True)
class Feasible:
    model: Model


@dataclass(frozen=True)
class Infeasible:
    pass


FeasibilityResult = Union[Feasible, Infeasible]

INFEASIBLE = Infeasible()


# --------------------------------------------------------------------------
# Expression linearization and condition normalization
# --------------------------------------------------------------------------


def linearize(e: Expr, rename: Optional[Dict[str, str]] = None) -> LinearTerm:
    """Arithmetic expression to linear term; NonlinearError otherwise."""
    if isinstance(e, IntLiteral):
        return LinearTerm.make({}, e.value)
    if isinstance(e, Var):
        name = rename.get(e.name, e.name) if rename else e.name
        return LinearTerm.make({name: 1})
    if isinstance(e, Nondet):
        raise NonlinearError("nondet() has no linear form; callers introduce a fresh symbol")
    if isinstance(e, BinOp):
        left = linearize(e.left, rename)
        right = linearize(e.right, rename)
        if e.op == "+":
            return left.add(right)
        if e.op == "-":
            return left.add(right.negate())
        if e.op == "*":
            if not left.coeffs:
                return right.scale(left.constant)
            if not right.coeffs:
                return left.scale(right.constant)
            raise NonlinearError(f"nonlinear product in {e!r}")
        raise ValueError(f"unknown operator {e.op}")
    raise NonlinearError(f"not an arithmetic expression: {e!r}")


def atom_constraints(cmp: Cmp, rename: Optional[Dict[str, str]] = None) -> List[List[LinearConstraint]]:
    """DNF branches of a single comparison, integer-tightened.

    != splits into two branches; every other operator yields one branch
    with one constraint.
    """
    t = linearize(cmp.left, rename).add(linearize(cmp.right, rename).negate())
    if cmp.op == "<":
        return [[LinearConstraint(t.shift(1), LE)]]
    if cmp.op == "<=":
        return [[LinearConstraint(t, LE)]]
    if cmp.op == ">":
        return [[LinearConstraint(t.negate().shift(1), LE)]]
    if cmp.op == ">=":
        return [[LinearConstraint(t.negate(), LE)]]
    if cmp.op == "==":
        return [[LinearConstraint(t, EQ)]]
    if cmp.op == "!=":
        return [
            [LinearConstraint(t.shift(1), LE)],
            [LinearConstraint(t.negate().shift(1), LE)],
        ]
    raise ValueError(f"unknown comparison {cmp.op}")


def normalize_condition(
    cond: Expr, rename: Optional[Dict[str, str]] = None, branch_cap: int = 4096
) -> Tuple[Conjunction, ...]:
    """Disjunctive normal form of a condition as Conjunction branches."""

    def walk(e: Expr) -> List[List[LinearConstraint]]:
        if isinstance(e, Cmp):
            return atom_constraints(e, rename)
        if isinstance(e, And):
            out = []
            for l, r in itertools.product(walk(e.left), walk(e.right)):
                out.append(l + r)
                if len(out) > branch_cap:
                    raise BlowupError("condition normalization exceeded branch cap")
            return out
        if isinstance(e, Or):
            return walk(e.left) + walk(e.right)
        raise TypeError(f"not a condition: {e!r}")

    branches = walk(to_nnf(cond))
    out = {Conjunction(b): None for b in branches}
    return tuple(sorted(out, key=lambda c: c.constraints))


def negate_constraint(atom: LinearConstraint) -> List[LinearConstraint]:
    """Integer-tightened negation as DNF branches of single constraints."""
    t = atom.term
    if atom.relation == LE:
        return [LinearConstraint(t.negate().shift(1), LE)]
    if atom.relation == EQ:
        return [LinearConstraint(t.shift(1), LE), LinearConstraint(t.negate().shift(1), LE)]
    return [LinearConstraint(t, EQ)]


# --------------------------------------------------------------------------
# Fourier-Motzkin feasibility
# --------------------------------------------------------------------------


class _Row:
    """coeffs * vars + const <= 0 over Fractions."""

    __slots__ = ("coeffs", "const")

    def __init__(self, coeffs: Dict[str, Fraction], const: Fraction):
        self.coeffs = {v: c for v, c in coeffs.items() if c != 0}
        self.const = const

    def key(self) -> Tuple:
        """Scale-normalized coefficient vector (for dedup/domination)."""
        if not self.coeffs:
            return ((), None)
        items = tuple(sorted(self.coeffs.items()))
        lead = abs(items[0][1])
        return (tuple((v, c / lead) for v, c in items), None)

    def scaled_const(self) -> Fraction:
        if not self.coeffs:
            return self.const
        lead = abs(sorted(self.coeffs.items())[0][1])
        return self.const / lead


def _substitute(row_coeffs: Dict[str, Fraction], row_const: Fraction, var: str,
                repl_coeffs: Dict[str, Fraction], repl_const: Fraction):
    """Replace var by its solved form in (coeffs, const) in place."""
    c = row_coeffs.pop(var, Fraction(0))
    if c == 0:
        return row_coeffs, row_const
    for v, rc in repl_coeffs.items():
        row_coeffs[v] = row_coeffs.get(v, Fraction(0)) + c * rc
    return row_coeffs, row_const + c * repl_const


def is_feasible(
    conjunction: Conjunction, constraint_cap: int = DEFAULT_CONSTRAINT_CAP
) -> FeasibilityResult:
    """Rational satisfiability with a back-substituted model.

    Raises BlowupError when intermediate constraint counts exceed the
    cap; callers treat that conservatively.  != constraints are rejected
    (normalize_condition splits them into branches first).
    """
    eqs: List[Tuple[Dict[str, Fraction], Fraction]] = []
    rows: List[_Row] = []
    for c in conjunction:
        if c.relation == NE:
            raise ValueError("is_feasible does not accept != constraints")
        coeffs = {v: Fraction(k) for v, k in c.term.coeffs}
        const = Fraction(c.term.constant)
        if c.relation == EQ:
            eqs.append((coeffs, const))
        else:
            rows.append(_Row(coeffs, const))

    # Equalities first: solve and substitute everywhere.
    substitutions: List[Tuple[str, Dict[str, Fraction], Fraction]] = []
    while eqs:
        # Pending equalities already carry all prior substitutions.
        coeffs, const = eqs.pop(0)
        coeffs = {v: c for v, c in coeffs.items() if c != 0}
        if not coeffs:
            if const != 0:
                return INFEASIBLE
            continue
        var = sorted(coeffs)[0]
        a = coeffs.pop(var)
        repl = {v: -c / a for v, c in coeffs.items()}
        repl_const = -const / a
        # substitute into pending equalities
        new_eqs = []
        for ec, ek in eqs:
            ec = dict(ec)
            ec, ek = _substitute(ec, ek, var, repl, repl_const)
            new_eqs.append((ec, ek))
        eqs = new_eqs
        substitutions.append((var, repl, repl_const))

    if substitutions:
        new_rows = []
        for row in rows:
            coeffs, const = dict(row.coeffs), row.const
            for var, rc, rk in substitutions:
                coeffs, const = _substitute(coeffs, const, var, rc, rk)
            new_rows.append(_Row(coeffs, const))
        rows = new_rows

    # Fourier-Motzkin elimination with bookkeeping for back-substitution.
    eliminated: List[Tuple[str, List[_Row], List[_Row]]] = []
    active = _dedup(rows)
    while True:
        variables = sorted({v for r in active for v in r.coeffs})
        if not variables:
            break
        # cheapest variable first: fewest lower*upper products
        def cost(v: str) -> Tuple[int, str]:
            lo = sum(1 for r in active if r.coeffs.get(v, 0) < 0)
            hi = sum(1 for r in active if r.coeffs.get(v, 0) > 0)
            return (lo * hi, v)

        var = min(variables, key=cost)
        lowers = [r for r in active if r.coeffs.get(var, 0) < 0]
        uppers = [r for r in active if r.coeffs.get(var, 0) > 0]
        rest = [r for r in active if var not in r.coeffs]
        for lo, hi in itertools.product(lowers, uppers):
            # lo: a*var + L <= 0 with a < 0; hi: b*var + U <= 0 with b > 0.
            a = lo.coeffs[var]
            b = hi.coeffs[var]
            coeffs: Dict[str, Fraction] = {}
            for v, c in lo.coeffs.items():
                if v != var:
                    coeffs[v] = coeffs.get(v, Fraction(0)) + c * b
            for v, c in hi.coeffs.items():
                if v != var:
                    coeffs[v] = coeffs.get(v, Fraction(0)) - c * a
            const = lo.const * b - hi.const * a
            rest.append(_Row(coeffs, const))
            if len(rest) > constraint_cap:
                raise BlowupError(
                    f"Fourier-Motzkin exceeded {constraint_cap} intermediate constraints"
                )
        eliminated.append((var, lowers, uppers))
        active = _dedup(rest)

    for r in active:
        if r.const > 0:
            return INFEASIBLE

    # Back-substitution: assign eliminated variables in reverse order.
    values: Dict[str, Fraction] = {}
    for var, lowers, uppers in reversed(eliminated):
        lo_bound: Optional[Fraction] = None
        for r in lowers:
            # a*var + rest + const <= 0, a < 0  =>  var >= (rest + const) / (-a)
            a = r.coeffs[var]
            rest_val = r.const + sum(c * values[v] for v, c in r.coeffs.items() if v != var)
            bound = rest_val / (-a)
            lo_bound = bound if lo_bound is None else max(lo_bound, bound)
        hi_bound: Optional[Fraction] = None
        for r in uppers:
            a = r.coeffs[var]
            rest_val = r.const + sum(c * values[v] for v, c in r.coeffs.items() if v != var)
            bound = -rest_val / a
            hi_bound = bound if hi_bound is None else min(hi_bound, bound)
        values[var] = _pick_value(lo_bound, hi_bound)

    for var, repl, repl_const in reversed(substitutions):
        total = repl_const
        for v, c in repl.items():
            if v not in values:
                values[v] = Fraction(0)
            total += c * values[v]
        values[var] = total

    for v in conjunction.variables():
        values.setdefault(v, Fraction(0))
    model = Model.make(values)
    return Feasible(model)


def _dedup(rows: List[_Row]) -> List[_Row]:
    """Drop constant non-positive rows and keep only the tightest row per
    scale-normalized coefficient vector."""
    best: Dict[Tuple, _Row] = {}
    for r in rows:
        if not r.coeffs:
            if r.const <= 0:
                continue  # trivially true
            return [r]  # trivially false dominates everything
        key = r.key()
        cur = best.get(key)
        if cur is None or r.scaled_const() > cur.scaled_const():
            best[key] = r
    return list(best.values())


def _pick_value(lo: Optional[Fraction], hi: Optional[Fraction]) -> Fraction:
    """Deterministic value in [lo, hi], preferring integers near zero."""
    if lo is None and hi is None:
        return Fraction(0)
    if lo is None:
        return Fraction(min(0, floor(hi)))
    if hi is None:
        return Fraction(max(0, ceil(lo)))
    if lo > hi:
        raise AssertionError("empty interval after Fourier-Motzkin")
    lo_int = ceil(lo)
    if lo_int <= hi:
        if lo <= 0 <= hi:
            return Fraction(0)
        return Fraction(lo_int) if lo > 0 else Fraction(floor(hi))
    return (lo + hi) / 2


def entails(conjunction: Conjunction, atom: LinearConstraint) -> bool:
    """conjunction |= atom over the rationals (integer-tightened negation).

    BlowupError degrades to False: failing to prove an entailment only
    loses precision, never soundness.
    """
    for branch in negate_constraint(atom):
        try:
            result = is_feasible(conjunction.and_also([branch]))
        except BlowupError:
            return False
        if isinstance(result, Feasible):
            return False
    return True


# --------------------------------------------------------------------------
# Integer witness search
# --------------------------------------------------------------------------


def integer_witness(
    conjunction: Conjunction, box: Dict[str, Tuple[int, int]]
) -> Optional[Dict[str, int]]:
    """Exhaustive integer search over the box, with backtracking pruning.

    The box must bound every variable of the conjunction.  Returns the
    lexicographically first model (variables in sorted order, values
    ascending) or None.
    """
    variables = list(conjunction.variables())
    for v in variables:
        if v not in box:
            raise ValueError(f"box does not bound variable {v!r}")
    volume = 1
    for v in variables:
        lo, hi = box[v]
        if hi < lo:
            return None
        volume *= hi - lo + 1
        if volume > WITNESS_POINT_CAP:
            raise BoxTooLargeError(f"box volume exceeds {WITNESS_POINT_CAP} points")

    order = sorted(variables)
    position = {v: i for i, v in enumerate(order)}
    # Constraint is checkable once its latest-ordered variable is assigned.
    check_at: Dict[int, List[LinearConstraint]] = {}
    for c in conjunction:
        vs = c.variables()
        if not vs:
            if not c.satisfied_by({}):
                return None
            continue
        check_at.setdefault(max(position[v] for v in vs), []).append(c)

    values: Dict[str, Fraction] = {}

    def feasible_at(level: int) -> bool:
        return all(c.satisfied_by(values) for c in check_at.get(level, ()))

    def search(level: int) -> Optional[Dict[str, int]]:
        if level == len(order):
            return {v: int(values[v]) for v in order}
        var = order[level]
        lo, hi = box[var]
        for x in range(lo, hi + 1):
            values[var] = Fraction(x)
            if feasible_at(level):
                found = search(level + 1)
                if found is not None:
                    return found
        values.pop(var, None)
        return None

    return search(0)


# --------------------------------------------------------------------------
# Projection (used by predicate discovery)
# --------------------------------------------------------------------------


def project(
    constraints: Sequence[LinearConstraint],
    keep: Iterable[str],
    constraint_cap: int = DEFAULT_CONSTRAINT_CAP,
    result_cap: int = 64,
) -> List[LinearConstraint]:
    """Project a conjunction onto the keep-variables.

    Equalities defining dropped variables are substituted; remaining
    dropped variables are Fourier-Motzkin eliminated.  Results come back
    gcd-canonicalized with integer coefficient scaling.
    """
    keep_set = set(keep)
    eqs: List[Tuple[Dict[str, Fraction], Fraction]] = []
    ineqs: List[_Row] = []
    for c in constraints:
        coeffs = {v: Fraction(k) for v, k in c.term.coeffs}
        const = Fraction(c.term.constant)
        if c.relation == EQ:
            eqs.append((coeffs, const))
        elif c.relation == LE:
            ineqs.append(_Row(coeffs, const))
        else:
            raise ValueError("project does not accept != constraints")

    out_eqs: List[Tuple[Dict[str, Fraction], Fraction]] = []
    # Substitute away dropped variables defined by equalities.
    changed = True
    while changed:
        changed = False
        for i, (coeffs, const) in enumerate(eqs):
            dropped = [v for v in coeffs if v not in keep_set]
            if not dropped:
                continue
            var = sorted(dropped)[0]
            a = coeffs.pop(var)
            repl = {v: -c / a for v, c in coeffs.items()}
            repl_const = -const / a
            rest = eqs[:i] + eqs[i + 1 :]
            new_eqs = []
            for ec, ek in rest:
                ec = dict(ec)
                ec, ek = _substitute(ec, ek, var, repl, repl_const)
                new_eqs.append((ec, ek))
            eqs = new_eqs
            new_ineqs = []
            for r in ineqs:
                rc, rk = dict(r.coeffs), r.const
                rc, rk = _substitute(rc, rk, var, repl, repl_const)
                new_ineqs.append(_Row(rc, rk))
            ineqs = new_ineqs
            changed = True
            break
    out_eqs = [(c, k) for c, k in eqs if any(v in keep_set for v in c) or not c]

    active = _dedup(ineqs)
    while True:
        dropped = sorted({v for r in active for v in r.coeffs if v not in keep_set})
        if not dropped:
            break
        var = dropped[0]
        lowers = [r for r in active if r.coeffs.get(var, 0) < 0]
        uppers = [r for r in active if r.coeffs.get(var, 0) > 0]
        rest = [r for r in active if var not in r.coeffs]
        for lo, hi in itertools.product(lowers, uppers):
            a = lo.coeffs[var]
            b = hi.coeffs[var]
            coeffs = {}
            for v, c in lo.coeffs.items():
                if v != var:
                    coeffs[v] = coeffs.get(v, Fraction(0)) + c * b
            for v, c in hi.coeffs.items():
                if v != var:
                    coeffs[v] = coeffs.get(v, Fraction(0)) - c * a
            rest.append(_Row(coeffs, lo.const * b - hi.const * a))
            if len(rest) > constraint_cap:
                raise BlowupError("projection exceeded the constraint cap")
        active = _dedup(rest)

    results: List[LinearConstraint] = []
    for coeffs, const in out_eqs:
        lc = _to_integer_constraint(coeffs, const, EQ)
        if lc is not None:
            results.append(lc)
    for r in active:
        if not r.coeffs:
            continue
        lc = _to_integer_constraint(r.coeffs, r.const, LE)
        if lc is not None:
            results.append(lc)
    dedup = {c: None for c in results}
    out = sorted(dedup, key=lambda c: (c.relation, c.term.coeffs, c.term.constant))
    return out[:result_cap]


def _to_integer_constraint(
    coeffs: Dict[str, Fraction], const: Fraction, relation: str
) -> Optional[LinearConstraint]:
    """Scale a Fraction row to integers, gcd-canonicalize, drop trivia."""
    coeffs = {v: c for v, c in coeffs.items() if c != 0}
    if not coeffs:
        return None
    denominators = [c.denominator for c in coeffs.values()] + [const.denominator]
    lcm = 1
    for d in denominators:
        lcm = lcm * d // gcd(lcm, d)
    int_coeffs = {v: int(c * lcm) for v, c in coeffs.items()}
    int_const = const * lcm
    if relation == LE:
        # Integer semantics allow floor-tightening of a fractional constant.
        k = int(floor(int_const))
    else:
        if int_const.denominator != 1:
            return None
        k = int(int_const)
    lc = LinearConstraint(LinearTerm.make(int_coeffs, k), relation).canonical()
    if relation == EQ:
        # Normalize equality sign: first coefficient positive.
        first = lc.term.coeffs[0][1] if lc.term.coeffs else 1
        if first < 0:
            lc = LinearConstraint(lc.term.negate(), EQ)
    return lc
