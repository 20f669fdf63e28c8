"""Concrete interpreter over control-flow automata.

Serves as the independent ground-truth oracle: executions are real,
values are concrete integers.  nondet() either branches over a finite
value range (exhaustive enumeration) or consumes a scripted feed
(counterexample replay).  Reading an uninitialized variable is an
error; bundled programs always initialize before use.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from .ast import eval_arith, eval_condition
from .cfa import Assign, Assume, Call, CfaEdge, Location, Nondet, Program, Return, Skip, RETURN_SLOT, qualify
from .errors import InterpError

DEFAULT_STEP_LIMIT = 20_000


@dataclass
class ExecutionResult:
    reached_error: bool
    error_location: Optional[Location]
    nondet_values: Tuple[int, ...]
    trace: Tuple[CfaEdge, ...]


@dataclass
class _State:
    location: Location
    env: Dict[str, int]
    stack: List[Tuple[str, Location]]
    nondet_used: List[int]
    trace: List[CfaEdge]
    steps: int = 0


def _lookup(env: Dict[str, int], name: str) -> int:
    if name not in env:
        raise InterpError(f"read of uninitialized variable {name!r}")
    return env[name]


def _step(
    program: Program, st: _State, nondet_choice: Optional[int]
) -> Tuple[Optional[List[_State]], Optional[int]]:
    """Advance one edge.  Returns (successor states, nondet arity).

    A nondet arity of n != None means the caller must re-invoke with a
    choice; otherwise successors are complete.  No successors means the
    execution finished at main's exit.
    """
    loc = st.location
    cfa = program.cfas[loc.function]
    if loc in cfa.error_locations:
        raise AssertionError("caller handles error locations")

    edges = program.outgoing(loc)
    if not edges:
        return [], None  # function exit with empty stack handled by caller

    get = lambda name: _lookup(st.env, name)

    assume_edges = [e for e in edges if isinstance(e.op, Assume)]
    if assume_edges:
        taken = [e for e in assume_edges if eval_condition(e.op.cond, get) is True]
        if len(taken) != 1:
            raise InterpError(f"assume branches not mutually exclusive at {loc}")
        e = taken[0]
        st.location = e.target
        st.trace.append(e)
        return [st], None

    if len(edges) > 1 and not all(isinstance(e.op, Return) for e in edges):
        raise InterpError(f"ambiguous successor at {loc}")

    e = edges[0]
    op = e.op
    if isinstance(op, Skip):
        st.location = e.target
        st.trace.append(e)
        return [st], None
    if isinstance(op, Assign):
        if isinstance(op.rhs, Nondet):
            if nondet_choice is None:
                return None, 1  # ask caller for a value
            st.env[op.lhs] = nondet_choice
            st.nondet_used.append(nondet_choice)
        else:
            st.env[op.lhs] = eval_arith(op.rhs, get)
        st.location = e.target
        st.trace.append(e)
        return [st], None
    if isinstance(op, Call):
        values = [eval_arith(a, get) for a in op.args]
        for formal, v in zip(program.formals[op.callee], values):
            st.env[formal] = v
        st.stack.append((op.callee, op.return_target))
        st.location = program.cfas[op.callee].entry
        st.trace.append(e)
        return [st], None
    if isinstance(op, Return):
        if not st.stack:
            raise InterpError("return edge with empty callstack")
        callee, return_target = st.stack[-1]
        matching = [
            r
            for r in edges
            if isinstance(r.op, Return) and r.target == return_target
        ]
        if len(matching) != 1:
            raise InterpError(f"no unique return edge to {return_target}")
        r = matching[0]
        value = None
        if r.op.value is not None:
            value = eval_arith(r.op.value, get)
        prefix = callee + "::"
        for name in [n for n in st.env if n.startswith(prefix)]:
            del st.env[name]
        if value is None:
            st.env.pop(RETURN_SLOT, None)
        else:
            st.env[RETURN_SLOT] = value
        st.stack.pop()
        st.location = r.target
        st.trace.append(r)
        return [st], None
    raise InterpError(f"unknown edge operation {op!r}")


def _run(
    program: Program,
    nondet_values: Optional[Sequence[int]],
    nondet_feed: Optional[Sequence[int]],
    step_limit: int,
    stop_at_first_error: bool,
) -> Iterator[ExecutionResult]:
    """DFS over nondet choice points, yielding finished executions."""
    main = program.cfas[program.main_function]
    init = _State(main.entry, {}, [], [], [])
    pending: List[Tuple[_State, int]] = [(init, 0)]  # (state, feed cursor)
    while pending:
        st, cursor = pending.pop()
        finished: Optional[ExecutionResult] = None
        while True:
            loc = st.location
            cfa = program.cfas[loc.function]
            if loc in cfa.error_locations:
                finished = ExecutionResult(True, loc, tuple(st.nondet_used), tuple(st.trace))
                break
            if loc == main.exit and not st.stack:
                finished = ExecutionResult(False, None, tuple(st.nondet_used), tuple(st.trace))
                break
            st.steps += 1
            if st.steps > step_limit:
                raise InterpError(f"execution exceeded {step_limit} steps")
            succ, wants_nondet = _step(program, st, None)
            if wants_nondet:
                if nondet_feed is not None:
                    value = nondet_feed[cursor] if cursor < len(nondet_feed) else 0
                    succ, _ = _step(program, st, value)
                    st = succ[0]
                    cursor += 1
                    continue
                values = list(nondet_values or (0,))
                # Push all but the first choice as pending branches.
                for v in reversed(values[1:]):
                    clone = _State(
                        st.location,
                        dict(st.env),
                        list(st.stack),
                        list(st.nondet_used),
                        list(st.trace),
                        st.steps,
                    )
                    branched, _ = _step(program, clone, v)
                    pending.append((branched[0], cursor))
                succ, _ = _step(program, st, values[0])
                st = succ[0]
                continue
            if not succ:
                # non-main function exit is handled by Return edges; an
                # empty successor list only happens at main's exit.
                finished = ExecutionResult(False, None, tuple(st.nondet_used), tuple(st.trace))
                break
            st = succ[0]
        if finished is not None:
            yield finished
            if finished.reached_error and stop_at_first_error:
                return


def enumerate_executions(
    program: Program,
    nondet_values: Sequence[int] = (0, 1, 2, 3),
    step_limit: int = DEFAULT_STEP_LIMIT,
) -> List[ExecutionResult]:
    """All executions with nondet drawn from the given value range."""
    return list(_run(program, nondet_values, None, step_limit, stop_at_first_error=False))


def error_reachable(
    program: Program,
    nondet_values: Sequence[int] = (0, 1, 2, 3),
    step_limit: int = DEFAULT_STEP_LIMIT,
) -> bool:
    """True iff some execution over the nondet range reaches an error."""
    for result in _run(program, nondet_values, None, step_limit, stop_at_first_error=True):
        if result.reached_error:
            return True
    return False


def replay(
    program: Program,
    nondet_feed: Sequence[int],
    step_limit: int = DEFAULT_STEP_LIMIT,
) -> ExecutionResult:
    """Deterministic run consuming nondet values from a feed.

    Missing feed entries default to 0.
    """
    results = list(_run(program, None, list(nondet_feed), step_limit, stop_at_first_error=False))
    assert len(results) == 1
    return results[0]
