"""The generic reachability algorithm over composite abstract states.

One worklist loop serves every analysis composition: pop a state,
compute successors edge by edge, adjust precision, merge against
same-location reached states, and add uncovered successors.  Parent
edges are recorded in an abstract reachability graph so counterexample
paths can be reconstructed when an error location is hit.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .cfa import CfaEdge, Location, Program
from .cpa import CompositePrecision, CompositeState, CompositeCpa, PrecContext
from .errors import LimitExceeded

DEFAULT_POP_LIMIT = 1_000_000


@dataclass
class Limits:
    max_pops: int = DEFAULT_POP_LIMIT
    wall_seconds: Optional[float] = None


class ReachedSet:
    """Reached states indexed by location for merge/stop partner lookup."""

    def __init__(self):
        self._by_location: Dict[Location, Dict[CompositeState, None]] = {}
        self._all: Dict[CompositeState, None] = {}

    def __len__(self):
        return len(self._all)

    def __contains__(self, state: CompositeState) -> bool:
        return state in self._all

    def __iter__(self):
        return iter(self._all)

    def at_location(self, location: Location) -> Tuple[CompositeState, ...]:
        return tuple(self._by_location.get(location, ()))

    def add(self, state: CompositeState) -> None:
        if state in self._all:
            return
        self._all[state] = None
        self._by_location.setdefault(state.location, {})[state] = None

    def remove(self, state: CompositeState) -> None:
        self._all.pop(state, None)
        bucket = self._by_location.get(state.location)
        if bucket is not None:
            bucket.pop(state, None)


class Arg:
    """Parent-edge-labeled graph over reached states."""

    def __init__(self, root: CompositeState):
        self.root = root
        self.parents: Dict[CompositeState, Tuple[Optional[CompositeState], Optional[CfaEdge]]] = {
            root: (None, None)
        }
        self.covered: Dict[CompositeState, CompositeState] = {}

    def set_parent(self, state: CompositeState, parent: CompositeState, edge: CfaEdge) -> None:
        if state not in self.parents:
            self.parents[state] = (parent, edge)

    def adopt(self, new_state: CompositeState, old_state: CompositeState) -> None:
        """Transfer the parent link when a merge weakens old into new."""
        if old_state in self.parents and new_state not in self.parents:
            self.parents[new_state] = self.parents[old_state]

    def path_to_root(self, state: CompositeState) -> List[Tuple[CompositeState, Optional[CfaEdge]]]:
        out = []
        cur: Optional[CompositeState] = state
        seen = set()
        while cur is not None:
            if id(cur) in seen:
                raise AssertionError("parent chain contains a cycle")
            seen.add(id(cur))
            parent, edge = self.parents[cur]
            out.append((cur, edge))
            cur = parent
        return out


@dataclass
class CounterexamplePath:
    edges: Tuple[CfaEdge, ...]
    states: Tuple[CompositeState, ...]  # len(edges) + 1, root first

    def __post_init__(self):
        for a, b in zip(self.edges, self.edges[1:]):
            if a.target != b.source:
                raise AssertionError("counterexample edges are not CFA-adjacent")


@dataclass
class ReachResult:
    reached: ReachedSet
    arg: Arg
    error_state: Optional[CompositeState]
    pops: int


class Waitlist:
    def __init__(self, policy: str = "BFS"):
        if policy not in ("BFS", "DFS"):
            raise ValueError(f"unknown waitlist policy {policy!r}")
        self.policy = policy
        self._entries: deque = deque()

    def __len__(self):
        return len(self._entries)

    def add(self, state: CompositeState) -> None:
        self._entries.append(state)

    def pop(self) -> CompositeState:
        if self.policy == "BFS":
            return self._entries.popleft()
        return self._entries.pop()

    def replace(self, old: CompositeState, new: CompositeState) -> None:
        """Swap old for new; if old is not waiting, new must be explored
        anyway (it strictly weakened a reached state)."""
        try:
            idx = self._entries.index(old)
        except ValueError:
            if new not in self._entries:
                self._entries.append(new)
            return
        self._entries[idx] = new

    def __contains__(self, state: CompositeState) -> bool:
        return state in self._entries

    def discard(self, state: CompositeState) -> None:
        try:
            self._entries.remove(state)
        except ValueError:
            pass


def run_reachability(
    program: Program,
    cpa: CompositeCpa,
    precision: CompositePrecision,
    limits: Optional[Limits] = None,
    waitlist_policy: str = "BFS",
) -> ReachResult:
    """Explore until the waitlist empties or an error location is hit.

    Raises LimitExceeded when the pop or wall-time budget runs out; the
    caller maps that to an inconclusive verdict.
    """
    limits = limits or Limits()
    error_locations = program.error_locations
    init = cpa.initial_state(program.entry)
    reached = ReachedSet()
    reached.add(init)
    arg = Arg(init)
    waitlist = Waitlist(waitlist_policy)
    waitlist.add(init)

    if init.location in error_locations:
        return ReachResult(reached, arg, init, 0)

    deadline = None
    if limits.wall_seconds is not None:
        deadline = time.monotonic() + limits.wall_seconds

    pops = 0
    while len(waitlist):
        pops += 1
        if pops > limits.max_pops:
            raise LimitExceeded(f"pop budget of {limits.max_pops} exhausted")
        if deadline is not None and time.monotonic() > deadline:
            raise LimitExceeded(f"wall-time budget of {limits.wall_seconds}s exhausted")
        state = waitlist.pop()
        if state not in reached:
            continue  # merged away while waiting
        for edge in program.outgoing(state.location):
            for successor in cpa.transfer(state, edge, precision):
                adjusted, precision = cpa.prec(
                    successor, precision, PrecContext(successor.location, reached)
                )
                if adjusted.location in error_locations:
                    arg.set_parent(adjusted, state, edge)
                    reached.add(adjusted)
                    return ReachResult(reached, arg, adjusted, pops)
                for partner in reached.at_location(adjusted.location):
                    merged = cpa.merge(adjusted, partner, precision)
                    if merged != partner:
                        reached.remove(partner)
                        reached.add(merged)
                        waitlist.replace(partner, merged)
                        arg.adopt(merged, partner)
                if not cpa.stop(adjusted, reached.at_location(adjusted.location), precision):
                    arg.set_parent(adjusted, state, edge)
                    reached.add(adjusted)
                    waitlist.add(adjusted)
                else:
                    for candidate in reached.at_location(adjusted.location):
                        if cpa.less_or_equal(adjusted, candidate):
                            arg.covered[adjusted] = candidate
                            break
    return ReachResult(reached, arg, None, pops)


def extract_path(arg: Arg, error_state: CompositeState) -> CounterexamplePath:
    """Parent-edge walk from the error state back to the root, reversed."""
    chain = arg.path_to_root(error_state)
    chain.reverse()
    states = tuple(s for s, _ in chain)
    edges = tuple(e for _, e in chain if e is not None)
    return CounterexamplePath(edges, states)
