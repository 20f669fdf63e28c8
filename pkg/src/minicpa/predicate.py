"""Predicate abstraction with location-indexed precision.

A state is the set of precision predicates known to hold (a
conjunction); the successor along an edge keeps exactly those
predicates of the target location's precision that are entailed by the
one-step strongest postcondition, each checked independently.  The
precision starts empty everywhere and grows only through refinement,
so unrefined locations stay maximally abstract.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple

from .ast import Nondet
from .cfa import Assign, Assume, Call, CfaEdge, Location, Program, Return, Skip, RETURN_SLOT
from .cpa import Cpa, PrecContext
from .errors import BlowupError, NonlinearError
from .solver import (
    Conjunction,
    Feasible,
    LinearConstraint,
    LinearTerm,
    entails,
    is_feasible,
    linearize,
    normalize_condition,
)

OLD_SUFFIX = "!old"


@dataclass(frozen=True, order=True)
class Predicate:
    """Canonical linear atom; equality is syntactic on the canonical form."""

    constraint: LinearConstraint

    @staticmethod
    def of(constraint: LinearConstraint) -> "Predicate":
        return Predicate(constraint.canonical())

    @property
    def display(self) -> str:
        return self.constraint.format()

    def __repr__(self):
        return f"<{self.display}>"


@dataclass(frozen=True)
class PredicateState:
    """Conjunction of predicates known true, or bottom (holds=None)."""

    holds: Optional[FrozenSet[Predicate]]

    @property
    def is_bottom(self) -> bool:
        return self.holds is None

    def __repr__(self):
        if self.is_bottom:
            return "pred(bottom)"
        return "pred{" + ", ".join(sorted(p.display for p in self.holds)) + "}"


PREDICATE_TOP = PredicateState(frozenset())
PREDICATE_BOTTOM = PredicateState(None)


@dataclass(frozen=True)
class PredicatePrecision:
    """Location-indexed predicate sets plus a global set."""

    by_location: Tuple[Tuple[Location, FrozenSet[Predicate]], ...] = ()
    global_predicates: FrozenSet[Predicate] = frozenset()

    @staticmethod
    def empty() -> "PredicatePrecision":
        return PredicatePrecision()

    def location_map(self) -> Dict[Location, FrozenSet[Predicate]]:
        return dict(self.by_location)

    def at(self, location: Location) -> FrozenSet[Predicate]:
        return self.location_map().get(location, frozenset()) | self.global_predicates

    def extended(
        self, new_by_location: Mapping[Location, Iterable[Predicate]], scope: str = "location"
    ) -> "PredicatePrecision":
        if scope == "global":
            added = frozenset(p for ps in new_by_location.values() for p in ps)
            return PredicatePrecision(self.by_location, self.global_predicates | added)
        merged = self.location_map()
        for loc, ps in new_by_location.items():
            merged[loc] = merged.get(loc, frozenset()) | frozenset(ps)
        ordered = tuple(sorted(merged.items(), key=lambda kv: kv[0]))
        return PredicatePrecision(ordered, self.global_predicates)

    def distinct_predicates(self) -> FrozenSet[Predicate]:
        out = set(self.global_predicates)
        for _, ps in self.by_location:
            out |= ps
        return frozenset(out)

    def per_location_total(self) -> int:
        return sum(len(ps) for _, ps in self.by_location) + len(self.global_predicates)


class PredicateCpa(Cpa):
    name = "predicate"

    def __init__(self, program: Optional[Program] = None):
        self.program = program

    def initial_state(self, entry: Location) -> PredicateState:
        return PREDICATE_TOP

    def initial_precision(self) -> PredicatePrecision:
        return PredicatePrecision.empty()

    def less_or_equal(self, a: PredicateState, b: PredicateState) -> bool:
        if a.is_bottom:
            return True
        if b.is_bottom:
            return False
        return b.holds <= a.holds

    def join(self, a: PredicateState, b: PredicateState) -> PredicateState:
        if a.is_bottom:
            return b
        if b.is_bottom:
            return a
        return PredicateState(a.holds & b.holds)

    # -- strongest postcondition -----------------------------------------------

    def _state_constraints(self, state: PredicateState) -> List[LinearConstraint]:
        return [p.constraint for p in sorted(state.holds)]

    def _formula(
        self, state: PredicateState, edge: CfaEdge
    ) -> Optional[List[List[LinearConstraint]]]:
        """One-step strongest-postcondition as DNF branches over current
        variables (assignment pre-values renamed to fresh symbols).
        Returns None when the edge needs no feasibility filtering
        (assignment from the empty predicate set)."""
        op = edge.op
        held = self._state_constraints(state)
        if isinstance(op, Skip):
            return [held]
        if isinstance(op, (Assign, Return)):
            lhs = op.lhs if isinstance(op, Assign) else RETURN_SLOT
            rename = {lhs: lhs + OLD_SUFFIX}
            renamed = [c.rename(rename) for c in held]
            value = op.rhs if isinstance(op, Assign) else op.value
            constraints = list(renamed)
            if value is not None and not isinstance(value, Nondet):
                try:
                    rhs_term = linearize(value, rename)
                except NonlinearError:
                    rhs_term = None
                if rhs_term is not None:
                    bound = LinearTerm.make({lhs: 1}).add(rhs_term.negate())
                    constraints.append(LinearConstraint(bound, "==0"))
            return [constraints]
        if isinstance(op, Assume):
            try:
                branches = normalize_condition(op.cond)
            except (BlowupError, NonlinearError):
                return [held]
            return [held + list(branch) for branch in branches]
        if isinstance(op, Call):
            constraints = list(held)
            formals = self.program.formals[op.callee] if self.program else ()
            rename = {f: f + OLD_SUFFIX for f in formals}
            constraints = [c.rename(rename) for c in constraints]
            for formal, actual in zip(formals, op.args):
                if isinstance(actual, Nondet):
                    continue
                try:
                    t = linearize(actual, rename)
                except NonlinearError:
                    continue
                constraints.append(
                    LinearConstraint(LinearTerm.make({formal: 1}).add(t.negate()), "==0")
                )
            return [constraints]
        raise TypeError(f"unknown edge operation {op!r}")

    def transfer(
        self, state: PredicateState, edge: CfaEdge, precision: PredicatePrecision
    ) -> Tuple[PredicateState, ...]:
        target_predicates = sorted(precision.at(edge.target))
        op = edge.op

        # Assignments from the empty set are always satisfiable: skip the
        # feasibility pre-check (and with no predicates to prove, skip
        # the solver entirely).
        if not state.holds and isinstance(op, (Assign, Skip, Call, Return)):
            if not target_predicates:
                return (PREDICATE_TOP,)

        branches = self._formula(state, edge)
        conjunctions = []
        for branch in branches:
            conj = Conjunction(branch)
            if not state.holds and isinstance(op, (Assign, Call, Return, Skip)):
                conjunctions.append(conj)
                continue
            try:
                feasible = isinstance(is_feasible(conj), Feasible)
            except BlowupError:
                feasible = True  # conservative: keep the branch
            if feasible:
                conjunctions.append(conj)
        if not conjunctions:
            return ()

        holds = []
        for p in target_predicates:
            try:
                if all(entails(conj, p.constraint) for conj in conjunctions):
                    holds.append(p)
            except BlowupError:
                continue  # drop the predicate: loses precision, stays sound
        return (PredicateState(frozenset(holds)),)

    def prec(
        self, state: PredicateState, precision: PredicatePrecision, context: PrecContext
    ) -> Tuple[PredicateState, PredicatePrecision]:
        if state.is_bottom:
            return state, precision
        allowed = precision.at(context.location)
        if state.holds <= allowed:
            return state, precision
        return PredicateState(state.holds & allowed), precision
