"""Control-flow automata: one per function, built from the source AST.

Locations are program-counter values; edges carry assume, assignment,
skip, call, or return operations.  Both branches of every condition are
materialized as sibling assume edges.  Local variables and parameters
are qualified as "function::name" so that states of all analyses live
in one flat namespace; the reserved scratch variable RETURN_SLOT carries
return values across call boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

from . import parser as src
from .ast import Expr, IntLiteral, Nondet, Var, expr_variables, format_expr, negate_condition
from .errors import SemanticError

RETURN_SLOT = "__ret"


class Location(NamedTuple):
    index: int
    function: str

    def __repr__(self) -> str:
        return f"L{self.index}"


@dataclass(frozen=True)
class Assume:
    cond: Expr  # the effective condition of this branch (already negated on the false side)
    truth_branch: bool


@dataclass(frozen=True)
class Assign:
    lhs: str
    rhs: Expr  # may be Nondet


@dataclass(frozen=True)
class Skip:
    pass


@dataclass(frozen=True)
class Call:
    callee: str
    args: Tuple[Expr, ...]
    return_target: Location


@dataclass(frozen=True)
class Return:
    value: Optional[Expr]  # expression over callee variables, None for void


EdgeOp = Union[Assume, Assign, Skip, Call, Return]


@dataclass(frozen=True)
class CfaEdge:
    source: Location
    target: Location
    op: EdgeOp

    def describe(self) -> str:
        op = self.op
        if isinstance(op, Assume):
            return f"[{format_expr(op.cond)}]"
        if isinstance(op, Assign):
            return f"{op.lhs} = {format_expr(op.rhs)}"
        if isinstance(op, Skip):
            return "skip"
        if isinstance(op, Call):
            args = ", ".join(format_expr(a) for a in op.args)
            return f"call {op.callee}({args})"
        if isinstance(op, Return):
            if op.value is None:
                return "return"
            return f"return {format_expr(op.value)}"
        raise TypeError(f"unknown edge op: {op!r}")


@dataclass
class ControlFlowAutomaton:
    function_name: str
    entry: Location
    exit: Location
    locations: Tuple[Location, ...]
    edges: Tuple[CfaEdge, ...]
    error_locations: frozenset


@dataclass
class Program:
    cfas: Dict[str, ControlFlowAutomaton]
    main_function: str
    globals: frozenset
    variables: Tuple[str, ...]  # all qualified variables, deterministic order
    formals: Dict[str, Tuple[str, ...]]  # function -> qualified parameter names
    _outgoing: Dict[Location, Tuple[CfaEdge, ...]] = field(default_factory=dict)

    def outgoing(self, loc: Location) -> Tuple[CfaEdge, ...]:
        return self._outgoing.get(loc, ())

    @property
    def error_locations(self) -> frozenset:
        out = set()
        for cfa in self.cfas.values():
            out |= cfa.error_locations
        return frozenset(out)

    @property
    def entry(self) -> Location:
        return self.cfas[self.main_function].entry


def qualify(function: str, name: str) -> str:
    return f"{function}::{name}"


class _FunctionLowerer:
    def __init__(self, builder: "_ProgramBuilder", func: src.FuncDef):
        self.b = builder
        self.func = func
        self.scope: Dict[str, str] = {}  # source name -> qualified name
        for p in func.params:
            self._declare(p, func.line)
        self.entry = builder.entries[func.name]
        self.exit = builder.exits[func.name]
        self.edges: List[CfaEdge] = []
        self.locations: List[Location] = [self.entry, self.exit]
        self.error_locations: set = set()

    # -- locations and edges -------------------------------------------------

    def new_location(self) -> Location:
        loc = self.b.new_location(self.func.name)
        self.locations.append(loc)
        return loc

    def add_edge(self, source: Location, target: Location, op: EdgeOp) -> None:
        self.edges.append(CfaEdge(source, target, op))

    # -- scope ----------------------------------------------------------------

    def _declare(self, name: str, line: int) -> str:
        if name in self.scope:
            raise SemanticError(f"duplicate declaration of {name!r}", line, 0)
        q = qualify(self.func.name, name)
        self.scope[name] = q
        return q

    def resolve(self, name: str, line: int) -> str:
        if name in self.scope:
            return self.scope[name]
        if name in self.b.globals:
            return name
        raise SemanticError(f"undeclared variable {name!r}", line, 0)

    def qualify_expr(self, e: Expr, line: int) -> Expr:
        if isinstance(e, Var):
            return Var(self.resolve(e.name, line))
        if isinstance(e, IntLiteral) or isinstance(e, Nondet):
            return e
        # BinOp/Cmp/Not/And/Or all carry nested expressions
        fields = {}
        for name in e.__dataclass_fields__:
            value = getattr(e, name)
            fields[name] = self.qualify_expr(value, line) if not isinstance(value, (str, bool)) else value
        return type(e)(**fields)

    # -- statement lowering ---------------------------------------------------

    def lower_body(self) -> None:
        self.lower_seq(self.func.body, self.entry, self.exit)

    def lower_seq(
        self, stmts: Sequence[src.Stmt], cur: Location, final: Optional[Location]
    ) -> Optional[Location]:
        """Lower a statement sequence starting at cur.

        If final is given, flow ends exactly there (the last edge is aimed
        at it, or a skip is appended).  Returns the end location, or None
        when every path through the sequence returned.
        """
        for i, stmt in enumerate(stmts):
            is_last = i == len(stmts) - 1
            target = final if is_last else None
            if cur is None:
                # Unreachable code after return: lower from a detached
                # location so names are still checked, then prune.
                cur = self.new_location()
            cur = self.lower_stmt(stmt, cur, target)
        if final is not None and cur is not None and cur != final:
            self.add_edge(cur, final, Skip())
            cur = final
        return cur

    def lower_stmt(
        self, stmt: src.Stmt, cur: Location, target: Optional[Location]
    ) -> Optional[Location]:
        if isinstance(stmt, src.VarDecl):
            self._declare(stmt.name, stmt.line)
            return cur
        if isinstance(stmt, src.ErrorLabel):
            self.error_locations.add(cur)
            return cur
        if isinstance(stmt, src.AssignStmt):
            return self.lower_assign(stmt, cur, target)
        if isinstance(stmt, src.CallStmt):
            callee = self.b.check_call(stmt.callee, stmt.args, stmt.line, self.func.name)
            args = tuple(self.qualify_expr(a, stmt.line) for a in stmt.args)
            return self.emit_call(callee, args, cur, target)
        if isinstance(stmt, src.ReturnStmt):
            if stmt.value is not None:
                if not self.func.returns_int:
                    raise SemanticError(
                        f"void function {self.func.name!r} returns a value", stmt.line, 0
                    )
                rhs = self.qualify_expr(stmt.value, stmt.line)
                self.add_edge(cur, self.exit, Assign(self.return_var(), rhs))
            else:
                if self.func.returns_int:
                    raise SemanticError(
                        f"function {self.func.name!r} must return a value", stmt.line, 0
                    )
                self.add_edge(cur, self.exit, Skip())
            return None
        if isinstance(stmt, src.IfStmt):
            join = target if target is not None else self.new_location()
            cond = self.qualify_expr(stmt.cond, stmt.line)
            then_start = self.new_location()
            self.add_edge(cur, then_start, Assume(cond, True))
            self.lower_seq(stmt.then_body, then_start, join)
            neg = negate_condition(cond)
            if stmt.else_body is None:
                self.add_edge(cur, join, Assume(neg, False))
            else:
                else_start = self.new_location()
                self.add_edge(cur, else_start, Assume(neg, False))
                self.lower_seq(stmt.else_body, else_start, join)
            return join
        if isinstance(stmt, src.WhileStmt):
            head = cur
            if head == self.entry:
                head = self.new_location()
                self.add_edge(cur, head, Skip())
            cond = self.qualify_expr(stmt.cond, stmt.line)
            body_start = self.new_location()
            self.add_edge(head, body_start, Assume(cond, True))
            after = target if target is not None else self.new_location()
            self.add_edge(head, after, Assume(negate_condition(cond), False))
            self.lower_seq(stmt.body, body_start, head)
            return after
        if isinstance(stmt, src.BlockStmt):
            return self.lower_seq(stmt.body, cur, target)
        raise TypeError(f"unknown statement: {stmt!r}")

    def lower_assign(
        self, stmt: src.AssignStmt, cur: Location, target: Optional[Location]
    ) -> Location:
        lhs = self.resolve(stmt.target, stmt.line)
        if isinstance(stmt.rhs, src.CallExpr):
            callee = self.b.check_call(stmt.rhs.callee, stmt.rhs.args, stmt.line, self.func.name)
            if not callee.returns_int:
                raise SemanticError(
                    f"void function {callee.name!r} used in assignment", stmt.line, 0
                )
            args = tuple(self.qualify_expr(a, stmt.line) for a in stmt.rhs.args)
            after_call = self.emit_call(callee, args, cur, None)
            t = target if target is not None else self.new_location()
            self.add_edge(after_call, t, Assign(lhs, Var(RETURN_SLOT)))
            return t
        rhs = self.qualify_expr(stmt.rhs, stmt.line)
        t = target if target is not None else self.new_location()
        self.add_edge(cur, t, Assign(lhs, rhs))
        return t

    def emit_call(
        self, callee: src.FuncDef, args: Tuple[Expr, ...], cur: Location, target: Optional[Location]
    ) -> Location:
        rt = target if target is not None else self.new_location()
        self.add_edge(cur, self.b.entries[callee.name], Call(callee.name, args, rt))
        value = Var(qualify(callee.name, RETURN_SLOT)) if callee.returns_int else None
        self.add_edge(self.b.exits[callee.name], rt, Return(value))
        self.b.call_graph.setdefault(self.func.name, set()).add(callee.name)
        return rt

    def return_var(self) -> str:
        return qualify(self.func.name, RETURN_SLOT)


class _ProgramBuilder:
    def __init__(self, source: src.SourceProgram):
        self.source = source
        self.globals = set(source.globals)
        self.functions: Dict[str, src.FuncDef] = {}
        for f in source.functions:
            if f.name in self.functions:
                raise SemanticError(f"duplicate function {f.name!r}", f.line, 0)
            if f.name in self.globals:
                raise SemanticError(f"{f.name!r} is both a global and a function", f.line, 0)
            self.functions[f.name] = f
        self.counter = 0
        self.entries: Dict[str, Location] = {}
        self.exits: Dict[str, Location] = {}
        self.call_graph: Dict[str, set] = {}

    def new_location(self, function: str) -> Location:
        loc = Location(self.counter, function)
        self.counter += 1
        return loc

    def check_call(self, name: str, args, line: int, caller: str) -> src.FuncDef:
        callee = self.functions.get(name)
        if callee is None:
            raise SemanticError(f"call to undefined function {name!r}", line, 0)
        if len(args) != len(callee.params):
            raise SemanticError(
                f"{name!r} expects {len(callee.params)} argument(s), got {len(args)}", line, 0
            )
        return callee

    def build(self) -> Program:
        if "main" not in self.functions:
            raise SemanticError("missing main function", 1, 0)
        main = self.functions["main"]
        if main.params or main.returns_int:
            raise SemanticError("main must be 'void main()' with no parameters", main.line, 0)

        for f in self.source.functions:
            self.entries[f.name] = self.new_location(f.name)
            self.exits[f.name] = self.new_location(f.name)

        cfas: Dict[str, ControlFlowAutomaton] = {}
        formals: Dict[str, Tuple[str, ...]] = {}
        variables: List[str] = sorted(self.globals)
        variables.append(RETURN_SLOT)
        for f in self.source.functions:
            lw = _FunctionLowerer(self, f)
            lw.lower_body()
            cfa = self._finish(lw)
            cfas[f.name] = cfa
            formals[f.name] = tuple(qualify(f.name, p) for p in f.params)
            variables.extend(sorted(lw.scope.values()))
            if f.returns_int:
                variables.append(qualify(f.name, RETURN_SLOT))

        self._reject_recursion()

        outgoing: Dict[Location, List[CfaEdge]] = {}
        for cfa in cfas.values():
            for e in cfa.edges:
                outgoing.setdefault(e.source, []).append(e)
        program = Program(
            cfas=cfas,
            main_function="main",
            globals=frozenset(self.globals),
            variables=tuple(variables),
            formals=formals,
            _outgoing={k: tuple(v) for k, v in outgoing.items()},
        )
        _validate(program)
        return program

    def _finish(self, lw: _FunctionLowerer) -> ControlFlowAutomaton:
        # Intra-function reachability: plain edges plus call summaries
        # (call site -> return target).  Unreachable locations (code after
        # return) are pruned together with their edges.
        succ: Dict[Location, List[Location]] = {}
        for e in lw.edges:
            if isinstance(e.op, Call):
                succ.setdefault(e.source, []).append(e.op.return_target)
            elif isinstance(e.op, Return):
                continue
            else:
                succ.setdefault(e.source, []).append(e.target)
        reachable = {lw.entry}
        frontier = [lw.entry]
        while frontier:
            loc = frontier.pop()
            for nxt in succ.get(loc, ()):
                if nxt not in reachable:
                    reachable.add(nxt)
                    frontier.append(nxt)
        locations = tuple(
            loc for loc in dict.fromkeys(lw.locations) if loc in reachable or loc == lw.exit
        )
        edges = []
        for e in lw.edges:
            if isinstance(e.op, Return):
                # Return edges belong to the call site; the source is the
                # callee's exit, so prune by the surviving return target.
                if e.target in reachable:
                    edges.append(e)
            elif e.source in reachable:
                edges.append(e)
        errors = frozenset(loc for loc in lw.error_locations if loc in reachable)
        return ControlFlowAutomaton(
            function_name=lw.func.name,
            entry=lw.entry,
            exit=lw.exit,
            locations=locations,
            edges=tuple(edges),
            error_locations=errors,
        )

    def _reject_recursion(self) -> None:
        color: Dict[str, int] = {}

        def visit(fn: str, chain: List[str]) -> None:
            color[fn] = 1
            for callee in sorted(self.call_graph.get(fn, ())):
                if color.get(callee) == 1:
                    cycle = " -> ".join(chain + [callee])
                    raise SemanticError(f"recursive call cycle: {cycle}", 1, 0)
                if color.get(callee, 0) == 0:
                    visit(callee, chain + [callee])
            color[fn] = 2

        for fn in self.functions:
            if color.get(fn, 0) == 0:
                visit(fn, [fn])


def _validate(program: Program) -> None:
    for cfa in program.cfas.values():
        locs = set(cfa.locations)
        indeg = {loc: 0 for loc in cfa.locations}
        for e in cfa.edges:
            if e.source not in locs and not isinstance(e.op, Return):
                raise AssertionError(f"edge source {e.source} outside {cfa.function_name}")
            if isinstance(e.op, (Assume, Assign, Skip)):
                indeg[e.target] = indeg.get(e.target, 0) + 1
        if indeg.get(cfa.entry, 0) != 0:
            raise AssertionError(f"entry of {cfa.function_name} has incoming edges")
        # Both assume branches materialized
        by_source: Dict[Location, List[CfaEdge]] = {}
        for e in cfa.edges:
            if isinstance(e.op, Assume):
                by_source.setdefault(e.source, []).append(e)
        for source, group in by_source.items():
            if len(group) != 2 or {g.op.truth_branch for g in group} != {True, False}:
                raise AssertionError(f"assume edges from {source} are not a sibling pair")


def build_program(source_ast: src.SourceProgram) -> Program:
    return _ProgramBuilder(source_ast).build()


def parse(source: str) -> Program:
    """Parse MiniC text and lower it into control-flow automata."""
    return build_program(src.parse_source(source))


def parse_file(path) -> Program:
    with open(path, "r", encoding="utf-8") as fh:
        return parse(fh.read())


# --------------------------------------------------------------------------
# DOT export
# --------------------------------------------------------------------------


def export_dot(program: Program) -> str:
    """Graphviz rendering: one cluster per function, deterministic order."""
    lines = ["digraph program {", "  node [shape=circle];"]
    for name, cfa in program.cfas.items():
        lines.append(f"  subgraph cluster_{name} {{")
        lines.append(f'    label="{name}";')
        for loc in sorted(cfa.locations):
            attrs = [f'label="L{loc.index}"']
            if loc in cfa.error_locations:
                attrs.append("shape=doubleoctagon")
                attrs.append('color="red"')
            elif loc == cfa.entry:
                attrs.append("shape=box")
            lines.append(f"    n{loc.index} [{', '.join(attrs)}];")
        lines.append("  }")
    all_edges = []
    for cfa in program.cfas.values():
        all_edges.extend(cfa.edges)
    for e in sorted(all_edges, key=lambda e: (e.source.index, e.target.index, e.describe())):
        label = e.describe().replace('"', '\\"')
        lines.append(f'  n{e.source.index} -> n{e.target.index} [label="{label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
