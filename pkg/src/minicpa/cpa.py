"""The configurable-analysis interface and the composite analysis.

Every analysis implements one small operator family -- initial state,
partial order, join, transfer, merge, stop, precision adjustment -- and
the reachability algorithm drives whichever composition the properties
file selects, without knowing the concrete domains.  New analyses are
announced by registering a factory under a name; the configuration
refers to analyses by those names.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from .cfa import CfaEdge, Location, Program
from .errors import CompositionError


@dataclass(frozen=True)
class PrecContext:
    """Context handed to precision adjustment: the successor's location
    and a read-only view of the reached set."""

    location: Location
    reached: object = None


class Cpa:
    """Base operator family.  Defaults: merge-sep (never combine) and
    stop-sep (covered by a single reached state)."""

    name = "cpa"

    def initial_state(self, entry: Location):
        raise NotImplementedError

    def initial_precision(self):
        return None

    def less_or_equal(self, a, b) -> bool:
        raise NotImplementedError

    def join(self, a, b):
        raise NotImplementedError

    def transfer(self, state, edge: CfaEdge, precision) -> Tuple:
        raise NotImplementedError

    def merge(self, s1, s2, precision):
        return s2

    def stop(self, state, reached: Iterable, precision) -> bool:
        return any(self.less_or_equal(state, r) for r in reached)

    def prec(self, state, precision, context: PrecContext):
        return state, precision


def merge_sep(s1, s2, precision=None):
    """The standard never-combine merge operator."""
    return s2


def stop_sep(less_or_equal: Callable, state, reached: Iterable, precision=None) -> bool:
    """Covered iff some single reached state is above the new state."""
    return any(less_or_equal(state, r) for r in reached)


@dataclass(frozen=True)
class CompositeState:
    components: Tuple

    @property
    def location(self) -> Location:
        return self.components[0].location

    def __repr__(self):
        return "(" + ", ".join(repr(c) for c in self.components) + ")"


@dataclass(frozen=True)
class CompositePrecision:
    components: Tuple

    def replace(self, index: int, precision) -> "CompositePrecision":
        parts = list(self.components)
        parts[index] = precision
        return CompositePrecision(tuple(parts))


class CompositeCpa(Cpa):
    """Componentwise product of analyses.

    Transfer takes the cartesian product of component successors and
    drops the whole successor when any component yields none (bottom
    strengthening).  Merge combines componentwise only when the location
    components agree, otherwise keeps the existing state.  Stop checks
    coverage against single reached states, componentwise.
    """

    name = "composite"

    def __init__(self, cpas: Sequence[Cpa]):
        names = [c.name for c in cpas]
        if names.count("location") != 1:
            raise CompositionError("exactly one location analysis is required")
        if names[0] != "location":
            raise CompositionError("the location analysis must come first")
        self.cpas: Tuple[Cpa, ...] = tuple(cpas)

    def index_of(self, name: str) -> Optional[int]:
        for i, c in enumerate(self.cpas):
            if c.name == name:
                return i
        return None

    def initial_state(self, entry: Location) -> CompositeState:
        return CompositeState(tuple(c.initial_state(entry) for c in self.cpas))

    def initial_precision(self) -> CompositePrecision:
        return CompositePrecision(tuple(c.initial_precision() for c in self.cpas))

    def less_or_equal(self, a: CompositeState, b: CompositeState) -> bool:
        return all(c.less_or_equal(x, y) for c, x, y in zip(self.cpas, a.components, b.components))

    def join(self, a: CompositeState, b: CompositeState) -> CompositeState:
        return CompositeState(
            tuple(c.join(x, y) for c, x, y in zip(self.cpas, a.components, b.components))
        )

    def transfer(
        self, state: CompositeState, edge: CfaEdge, precision: CompositePrecision
    ) -> Tuple[CompositeState, ...]:
        per_component: List[Tuple] = []
        for c, s, pi in zip(self.cpas, state.components, precision.components):
            succ = c.transfer(s, edge, pi)
            if not succ:
                return ()
            per_component.append(succ)
        # Cartesian product, deterministic order.
        results: List[Tuple] = [()]
        for succ in per_component:
            results = [prefix + (s,) for prefix in results for s in succ]
        return tuple(CompositeState(r) for r in results)

    def merge(
        self, s1: CompositeState, s2: CompositeState, precision: CompositePrecision
    ) -> CompositeState:
        if s1.components[0] != s2.components[0]:
            return s2
        merged = tuple(
            c.merge(x, y, pi)
            for c, x, y, pi in zip(self.cpas, s1.components, s2.components, precision.components)
        )
        if merged == s2.components:
            return s2
        return CompositeState(merged)

    def stop(
        self, state: CompositeState, reached: Iterable[CompositeState], precision
    ) -> bool:
        for r in reached:
            if r.components[0] != state.components[0]:
                continue
            if self.less_or_equal(state, r):
                return True
        return False

    def prec(
        self, state: CompositeState, precision: CompositePrecision, context: PrecContext
    ) -> Tuple[CompositeState, CompositePrecision]:
        states = []
        precisions = []
        for c, s, pi in zip(self.cpas, state.components, precision.components):
            ns, npi = c.prec(s, pi, context)
            states.append(ns)
            precisions.append(npi)
        return CompositeState(tuple(states)), CompositePrecision(tuple(precisions))


def compose(cpas: Sequence[Cpa]) -> CompositeCpa:
    if not cpas:
        raise CompositionError("cannot compose an empty analysis list")
    return CompositeCpa(cpas)


# --------------------------------------------------------------------------
# Registry: name -> factory(program, config) -> Cpa
# --------------------------------------------------------------------------

CpaFactory = Callable[[Program, object], Cpa]

_REGISTRY: Dict[str, CpaFactory] = {}


def register_cpa(name: str, factory: CpaFactory) -> None:
    if name in _REGISTRY:
        raise ValueError(f"analysis {name!r} already registered")
    _REGISTRY[name] = factory


def registered_cpas() -> Tuple[str, ...]:
    return tuple(sorted(_REGISTRY))


def resolve_cpa(name: str) -> CpaFactory:
    if name not in _REGISTRY:
        raise CompositionError(f"unknown analysis {name!r}; registered: {', '.join(sorted(_REGISTRY))}")
    return _REGISTRY[name]


def build_composite(names: Sequence[str], program: Program, config) -> CompositeCpa:
    cpas = [resolve_cpa(n)(program, config) for n in names]
    return compose(cpas)
