"""Componentwise value analyses: location, callstack, explicit values.

The explicit analysis is constant propagation with a precision
threshold: the precision counts distinct values observed per tracked
counter key and abstracts a variable to unknown once the count passes
the threshold.  Threshold 0 disables value tracking entirely; an
unbounded threshold is full constant propagation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Set, Tuple

from .ast import Cmp, Expr, Nondet, Var, conjunction_atoms, eval_arith, eval_condition
from .cfa import Assign, Assume, Call, CfaEdge, Location, Program, Return, Skip, RETURN_SLOT, qualify
from .cpa import Cpa, PrecContext
from .errors import CallstackOverflowError

# --------------------------------------------------------------------------
# Location analysis
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LocationState:
    location: Location

    def __repr__(self):
        return repr(self.location)


class LocationCpa(Cpa):
    """Tracks the program counter; gates merging in the composite."""

    name = "location"

    def initial_state(self, entry: Location) -> LocationState:
        return LocationState(entry)

    def less_or_equal(self, a: LocationState, b: LocationState) -> bool:
        return a.location == b.location

    def join(self, a: LocationState, b: LocationState) -> LocationState:
        if a != b:
            raise ValueError("location states only join when equal")
        return a

    def transfer(self, state: LocationState, edge: CfaEdge, precision) -> Tuple[LocationState, ...]:
        if edge.source != state.location:
            return ()
        return (LocationState(edge.target),)


# --------------------------------------------------------------------------
# Callstack analysis
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CallstackState:
    frames: Tuple[Tuple[str, Optional[Location]], ...]

    def __repr__(self):
        return "/".join(f for f, _ in self.frames)


class CallstackCpa(Cpa):
    """Finite call stack; pairs return edges with their call sites."""

    name = "callstack"

    def __init__(self, bound: int = 32):
        self.bound = bound

    def initial_state(self, entry: Location) -> CallstackState:
        return CallstackState(((entry.function, None),))

    def less_or_equal(self, a: CallstackState, b: CallstackState) -> bool:
        return a == b

    def join(self, a: CallstackState, b: CallstackState) -> CallstackState:
        if a != b:
            raise ValueError("callstack states only join when equal")
        return a

    def transfer(self, state: CallstackState, edge: CfaEdge, precision) -> Tuple[CallstackState, ...]:
        op = edge.op
        if isinstance(op, Call):
            if len(state.frames) >= self.bound:
                raise CallstackOverflowError(
                    f"call nesting exceeds the bound of {self.bound} frames"
                )
            return (CallstackState(state.frames + ((op.callee, op.return_target),)),)
        if isinstance(op, Return):
            top_function, return_target = state.frames[-1]
            if edge.source.function != top_function or edge.target != return_target:
                return ()
            return (CallstackState(state.frames[:-1]),)
        return (state,)


# --------------------------------------------------------------------------
# Explicit-value analysis
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ExplicitState:
    """Partial map from variable to known integer; absence means unknown.

    The distinguished bottom state has bindings=None.
    """

    bindings: Optional[Tuple[Tuple[str, int], ...]]

    @staticmethod
    def make(values: Dict[str, int]) -> "ExplicitState":
        return ExplicitState(tuple(sorted(values.items())))

    @property
    def is_bottom(self) -> bool:
        return self.bindings is None

    def get(self, name: str) -> Optional[int]:
        for v, k in self.bindings or ():
            if v == name:
                return k
        return None

    def as_dict(self) -> Dict[str, int]:
        return dict(self.bindings or ())

    def __repr__(self):
        if self.is_bottom:
            return "explicit(bottom)"
        inner = ", ".join(f"{v}={k}" for v, k in self.bindings)
        return "{" + inner + "}"


EXPLICIT_BOTTOM = ExplicitState(None)
EXPLICIT_TOP = ExplicitState(())


class ExplicitPrecision:
    """Threshold plus per-key observed-value bookkeeping.

    threshold None means unbounded (pure constant propagation).  Counter
    keys are (location, variable) pairs or plain variables, selected by
    the counter mode.  The books are owned by one analysis run.
    """

    def __init__(self, threshold: Optional[int], counter: str = "perLocation"):
        if counter not in ("perLocation", "global"):
            raise ValueError(f"unknown counter mode {counter!r}")
        self.threshold = threshold
        self.counter = counter
        self.observed: Dict[object, Set[int]] = {}
        self.saturated: Set[object] = set()

    def key(self, location: Location, variable: str):
        if self.counter == "global":
            return variable
        return (location, variable)

    def admit(self, location: Location, variable: str, value: int) -> bool:
        """Record an observation; False means the variable must be dropped."""
        if self.threshold is None:
            return True
        if self.threshold == 0:
            return False
        k = self.key(location, variable)
        if k in self.saturated:
            return False
        seen = self.observed.setdefault(k, set())
        seen.add(value)
        if len(seen) > self.threshold:
            self.saturated.add(k)
            return False
        return True

    def __repr__(self):
        t = "inf" if self.threshold is None else self.threshold
        return f"explicit-precision(threshold={t}, counter={self.counter})"


class ExplicitCpa(Cpa):
    name = "explicit"

    def __init__(self, program: Program, threshold: Optional[int] = 5, counter: str = "perLocation"):
        self.program = program
        self.threshold = threshold
        self.counter = counter

    def initial_state(self, entry: Location) -> ExplicitState:
        return EXPLICIT_TOP

    def initial_precision(self) -> ExplicitPrecision:
        return ExplicitPrecision(self.threshold, self.counter)

    def less_or_equal(self, a: ExplicitState, b: ExplicitState) -> bool:
        if a.is_bottom:
            return True
        if b.is_bottom:
            return False
        av = a.as_dict()
        return all(av.get(v) == k for v, k in b.bindings)

    def join(self, a: ExplicitState, b: ExplicitState) -> ExplicitState:
        if a.is_bottom:
            return b
        if b.is_bottom:
            return a
        bv = b.as_dict()
        return ExplicitState.make({v: k for v, k in a.bindings if bv.get(v) == k})

    def transfer(self, state: ExplicitState, edge: CfaEdge, precision) -> Tuple[ExplicitState, ...]:
        op = edge.op
        threshold_zero = precision is not None and precision.threshold == 0

        def finish(values: Dict[str, int]) -> Tuple[ExplicitState, ...]:
            if threshold_zero:
                return (EXPLICIT_TOP,)
            return (ExplicitState.make(values),)

        if isinstance(op, Skip):
            return finish(state.as_dict())
        if isinstance(op, Assign):
            values = state.as_dict()
            result = None if isinstance(op.rhs, Nondet) else eval_arith(op.rhs, state.get)
            if result is None:
                values.pop(op.lhs, None)
            else:
                values[op.lhs] = result
            return finish(values)
        if isinstance(op, Assume):
            verdict = eval_condition(op.cond, state.get)
            if verdict is False:
                return ()
            if verdict is True:
                return finish(state.as_dict())
            values = self._strengthen(state.as_dict(), op.cond)
            if values is None:
                return ()
            return finish(values)
        if isinstance(op, Call):
            values = state.as_dict()
            for formal, actual in zip(self.program.formals[op.callee], op.args):
                v = None if isinstance(actual, Nondet) else eval_arith(actual, state.get)
                if v is None:
                    values.pop(formal, None)
                else:
                    values[formal] = v
            return finish(values)
        if isinstance(op, Return):
            value = None
            if op.value is not None:
                value = eval_arith(op.value, state.get)
            callee_prefix = edge.source.function + "::"
            values = {v: k for v, k in state.as_dict().items() if not v.startswith(callee_prefix)}
            if value is None:
                values.pop(RETURN_SLOT, None)
            else:
                values[RETURN_SLOT] = value
            return finish(values)
        raise TypeError(f"unknown edge operation {op!r}")

    def _strengthen(self, values: Dict[str, int], cond: Expr) -> Optional[Dict[str, int]]:
        """Bind unknown variables forced by equality atoms of the
        top-level conjunction (x == k, with k evaluating concretely).
        Returns None when the strengthened state refutes the condition.
        """
        atoms = [a for a in conjunction_atoms(cond) if isinstance(a, Cmp) and a.op == "=="]
        changed = True
        while changed:
            changed = False
            get = lambda name: values.get(name)
            for atom in atoms:
                for var_side, other in ((atom.left, atom.right), (atom.right, atom.left)):
                    if isinstance(var_side, Var) and var_side.name not in values:
                        k = eval_arith(other, get)
                        if k is not None:
                            values[var_side.name] = k
                            changed = True
        if eval_condition(cond, lambda name: values.get(name)) is False:
            return None
        return values

    def prec(self, state: ExplicitState, precision: ExplicitPrecision, context: PrecContext):
        if state.is_bottom or precision.threshold is None:
            return state, precision
        values = state.as_dict()
        dropped = [v for v, k in values.items() if not precision.admit(context.location, v, k)]
        if not dropped:
            return state, precision
        for v in dropped:
            del values[v]
        return ExplicitState.make(values), precision
