"""MiniC tokenizer and recursive-descent parser.

Produces a statement-level source AST (SourceProgram); lowering into
control-flow automata lives in minicpa.cfa.  `format_source` renders a
SourceProgram back to text that re-parses to a structurally identical
AST.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

from .ast import (
    And,
    BinOp,
    Cmp,
    Expr,
    IntLiteral,
    Nondet,
    Not,
    Or,
    Var,
    format_expr,
)
from .errors import ParseError

KEYWORDS = {"void", "int", "if", "else", "while", "return", "ERROR", "nondet"}

_TOKEN_RE = re.compile(
    r"""
    (?P<skip>\s+|//[^\n]*|/\*.*?\*/)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<sym>==|!=|<=|>=|&&|\|\||[-+*(){};,=<>!:])
    """,
    re.VERBOSE | re.DOTALL,
)


@dataclass(frozen=True)
class Token:
    kind: str  # int | ident | keyword | sym | eof
    text: str
    line: int
    column: int


def tokenize(source: str) -> List[Token]:
    tokens = []
    pos = 0
    line = 1
    line_start = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            col = pos - line_start + 1
            raise ParseError(f"unexpected character {source[pos]!r}", line, col)
        text = m.group(0)
        col = pos - line_start + 1
        if m.lastgroup == "int":
            tokens.append(Token("int", text, line, col))
        elif m.lastgroup == "ident":
            kind = "keyword" if text in KEYWORDS else "ident"
            tokens.append(Token(kind, text, line, col))
        elif m.lastgroup == "sym":
            tokens.append(Token("sym", text, line, col))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            line_start = pos + text.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# --------------------------------------------------------------------------
# Statement-level AST
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CallExpr:
    """Function call as a full assignment right-hand side."""

    callee: str
    args: Tuple[Expr, ...]


Rhs = Union[Expr, CallExpr]


@dataclass
class VarDecl:
    name: str
    line: int = field(default=0, compare=False)


@dataclass
class AssignStmt:
    target: str
    rhs: Rhs
    line: int = field(default=0, compare=False)


@dataclass
class IfStmt:
    cond: Expr
    then_body: List["Stmt"]
    else_body: Optional[List["Stmt"]]
    line: int = field(default=0, compare=False)


@dataclass
class WhileStmt:
    cond: Expr
    body: List["Stmt"]
    line: int = field(default=0, compare=False)


@dataclass
class CallStmt:
    callee: str
    args: Tuple[Expr, ...]
    line: int = field(default=0, compare=False)


@dataclass
class ReturnStmt:
    value: Optional[Expr]
    line: int = field(default=0, compare=False)


@dataclass
class ErrorLabel:
    line: int = field(default=0, compare=False)


@dataclass
class BlockStmt:
    body: List["Stmt"]
    line: int = field(default=0, compare=False)


Stmt = Union[VarDecl, AssignStmt, IfStmt, WhileStmt, CallStmt, ReturnStmt, ErrorLabel, BlockStmt]


@dataclass
class FuncDef:
    name: str
    returns_int: bool
    params: Tuple[str, ...]
    body: List[Stmt]
    line: int = field(default=0, compare=False)


@dataclass
class SourceProgram:
    globals: Tuple[str, ...] = ()
    functions: List[FuncDef] = field(default_factory=list)


class _Parser:
    def __init__(self, tokens: List[Token]):
        self.tokens = tokens
        self.pos = 0

    # -- token plumbing ----------------------------------------------------

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def check(self, text: str) -> bool:
        tok = self.peek()
        return tok.kind in ("sym", "keyword") and tok.text == text

    def accept(self, text: str) -> bool:
        if self.check(text):
            self.advance()
            return True
        return False

    def expect(self, text: str) -> Token:
        tok = self.peek()
        if not self.check(text):
            raise ParseError(f"expected {text!r}, found {tok.text!r}", tok.line, tok.column)
        return self.advance()

    def expect_ident(self) -> Token:
        tok = self.peek()
        if tok.kind != "ident":
            raise ParseError(f"expected identifier, found {tok.text!r}", tok.line, tok.column)
        if tok.text.startswith("__"):
            raise ParseError(f"identifier {tok.text!r} is reserved", tok.line, tok.column)
        return self.advance()

    # -- grammar -----------------------------------------------------------

    def parse_program(self) -> SourceProgram:
        globals_: List[str] = []
        functions: List[FuncDef] = []
        while not self.peek().kind == "eof":
            tok = self.peek()
            if tok.text not in ("void", "int"):
                raise ParseError(
                    f"expected declaration or function, found {tok.text!r}", tok.line, tok.column
                )
            # Disambiguate "int x;" (global) from "int f(...)"
            if tok.text == "int" and self.peek(2).text != "(":
                self.advance()
                name = self.expect_ident()
                self.expect(";")
                globals_.append(name.text)
            else:
                functions.append(self.parse_function())
        if not functions:
            tok = self.peek()
            raise ParseError("program has no functions", tok.line, tok.column)
        return SourceProgram(tuple(globals_), functions)

    def parse_function(self) -> FuncDef:
        head = self.advance()  # void | int
        returns_int = head.text == "int"
        name = self.expect_ident()
        self.expect("(")
        params: List[str] = []
        if not self.check(")"):
            while True:
                self.expect("int")
                params.append(self.expect_ident().text)
                if not self.accept(","):
                    break
        self.expect(")")
        body = self.parse_block()
        return FuncDef(name.text, returns_int, tuple(params), body, head.line)

    def parse_block(self) -> List[Stmt]:
        self.expect("{")
        stmts: List[Stmt] = []
        while not self.check("}"):
            stmts.append(self.parse_stmt())
        self.expect("}")
        return stmts

    def parse_stmt(self) -> Stmt:
        tok = self.peek()
        if tok.text == "{":
            return BlockStmt(self.parse_block(), tok.line)
        if tok.text == "int":
            self.advance()
            name = self.expect_ident()
            self.expect(";")
            return VarDecl(name.text, tok.line)
        if tok.text == "if":
            self.advance()
            self.expect("(")
            cond = self.parse_condition()
            self.expect(")")
            then_body = self.parse_block()
            else_body = self.parse_block() if self.accept("else") else None
            return IfStmt(cond, then_body, else_body, tok.line)
        if tok.text == "while":
            self.advance()
            self.expect("(")
            cond = self.parse_condition()
            self.expect(")")
            body = self.parse_block()
            return WhileStmt(cond, body, tok.line)
        if tok.text == "return":
            self.advance()
            value = None if self.check(";") else self.parse_arith()
            self.expect(";")
            return ReturnStmt(value, tok.line)
        if tok.text == "ERROR":
            self.advance()
            self.expect(":")
            self.expect(";")
            return ErrorLabel(tok.line)
        if tok.kind == "ident":
            name = self.expect_ident()
            if self.accept("="):
                rhs = self.parse_rhs()
                self.expect(";")
                return AssignStmt(name.text, rhs, tok.line)
            if self.check("("):
                args = self.parse_args()
                self.expect(";")
                return CallStmt(name.text, args, tok.line)
            raise ParseError(f"expected '=' or '(' after {name.text!r}", tok.line, tok.column)
        raise ParseError(f"expected statement, found {tok.text!r}", tok.line, tok.column)

    def parse_args(self) -> Tuple[Expr, ...]:
        self.expect("(")
        args: List[Expr] = []
        if not self.check(")"):
            while True:
                args.append(self.parse_arith())
                if not self.accept(","):
                    break
        self.expect(")")
        return tuple(args)

    def parse_rhs(self) -> Rhs:
        tok = self.peek()
        if tok.text == "nondet":
            self.advance()
            self.expect("(")
            self.expect(")")
            return Nondet()
        if tok.kind == "ident" and self.peek(1).text == "(":
            name = self.expect_ident()
            return CallExpr(name.text, self.parse_args())
        return self.parse_arith()

    # -- conditions (with backtracking for the '(' ambiguity) ---------------

    def parse_condition(self) -> Expr:
        left = self.parse_and()
        while self.accept("||"):
            left = Or(left, self.parse_and())
        return left

    def parse_and(self) -> Expr:
        left = self.parse_not()
        while self.accept("&&"):
            left = And(left, self.parse_not())
        return left

    def parse_not(self) -> Expr:
        if self.accept("!"):
            return Not(self.parse_not())
        if self.check("("):
            # Either a parenthesized condition or the left operand of a
            # comparison: try the condition reading first, backtrack on
            # failure or if a comparison operator follows the group.
            saved = self.pos
            self.advance()
            try:
                cond = self.parse_condition()
                self.expect(")")
            except ParseError:
                self.pos = saved
                return self.parse_cmp()
            if self.peek().text in ("==", "!=", "<", "<=", ">", ">=", "+", "-", "*"):
                self.pos = saved
                return self.parse_cmp()
            return cond
        return self.parse_cmp()

    def parse_cmp(self) -> Expr:
        left = self.parse_arith()
        tok = self.peek()
        if tok.text not in ("==", "!=", "<", "<=", ">", ">="):
            raise ParseError("expected comparison operator", tok.line, tok.column)
        self.advance()
        right = self.parse_arith()
        return Cmp(tok.text, left, right)

    # -- arithmetic ----------------------------------------------------------

    def parse_arith(self) -> Expr:
        left = self.parse_term()
        while self.peek().text in ("+", "-") and self.peek().kind == "sym":
            op = self.advance().text
            left = BinOp(op, left, self.parse_term())
        return left

    def parse_term(self) -> Expr:
        left = self.parse_factor()
        while self.check("*"):
            tok = self.advance()
            right = self.parse_factor()
            if not self._has_literal_side(left, right):
                raise ParseError(
                    "nonlinear term: '*' needs at least one literal operand", tok.line, tok.column
                )
            left = BinOp("*", left, right)
        return left

    @staticmethod
    def _has_literal_side(left: Expr, right: Expr) -> bool:
        def is_const(e: Expr) -> bool:
            if isinstance(e, IntLiteral):
                return True
            if isinstance(e, BinOp):
                return is_const(e.left) and is_const(e.right)
            return False

        return is_const(left) or is_const(right)

    def parse_factor(self) -> Expr:
        tok = self.peek()
        if tok.text == "-":
            self.advance()
            inner = self.parse_factor()
            if isinstance(inner, IntLiteral):
                return IntLiteral(-inner.value)
            return BinOp("-", IntLiteral(0), inner)
        if tok.kind == "int":
            self.advance()
            return IntLiteral(int(tok.text))
        if tok.kind == "ident":
            if tok.text.startswith("__"):
                raise ParseError(f"identifier {tok.text!r} is reserved", tok.line, tok.column)
            self.advance()
            return Var(tok.text)
        if tok.text == "nondet":
            raise ParseError(
                "nondet() is only allowed as a full assignment right-hand side",
                tok.line,
                tok.column,
            )
        if self.accept("("):
            inner = self.parse_arith()
            self.expect(")")
            return inner
        raise ParseError(f"expected expression, found {tok.text!r}", tok.line, tok.column)


def parse_source(source: str) -> SourceProgram:
    """Parse MiniC text into a statement-level AST."""
    return _Parser(tokenize(source)).parse_program()


# --------------------------------------------------------------------------
# Formatter (round-trip partner of parse_source)
# --------------------------------------------------------------------------


def _format_stmt(stmt: Stmt, indent: int) -> List[str]:
    pad = "    " * indent
    if isinstance(stmt, VarDecl):
        return [f"{pad}int {stmt.name};"]
    if isinstance(stmt, AssignStmt):
        if isinstance(stmt.rhs, CallExpr):
            args = ", ".join(format_expr(a) for a in stmt.rhs.args)
            return [f"{pad}{stmt.target} = {stmt.rhs.callee}({args});"]
        return [f"{pad}{stmt.target} = {format_expr(stmt.rhs)};"]
    if isinstance(stmt, IfStmt):
        lines = [f"{pad}if ({format_expr(stmt.cond)}) {{"]
        for s in stmt.then_body:
            lines.extend(_format_stmt(s, indent + 1))
        if stmt.else_body is None:
            lines.append(f"{pad}}}")
        else:
            lines.append(f"{pad}}} else {{")
            for s in stmt.else_body:
                lines.extend(_format_stmt(s, indent + 1))
            lines.append(f"{pad}}}")
        return lines
    if isinstance(stmt, WhileStmt):
        lines = [f"{pad}while ({format_expr(stmt.cond)}) {{"]
        for s in stmt.body:
            lines.extend(_format_stmt(s, indent + 1))
        lines.append(f"{pad}}}")
        return lines
    if isinstance(stmt, CallStmt):
        args = ", ".join(format_expr(a) for a in stmt.args)
        return [f"{pad}{stmt.callee}({args});"]
    if isinstance(stmt, ReturnStmt):
        if stmt.value is None:
            return [f"{pad}return;"]
        return [f"{pad}return {format_expr(stmt.value)};"]
    if isinstance(stmt, ErrorLabel):
        return [f"{pad}ERROR: ;"]
    if isinstance(stmt, BlockStmt):
        lines = [f"{pad}{{"]
        for s in stmt.body:
            lines.extend(_format_stmt(s, indent + 1))
        lines.append(f"{pad}}}")
        return lines
    raise TypeError(f"not a statement: {stmt!r}")


def format_source(program: SourceProgram) -> str:
    """Render a SourceProgram as MiniC text."""
    lines: List[str] = []
    for g in program.globals:
        lines.append(f"int {g};")
    for func in program.functions:
        ret = "int" if func.returns_int else "void"
        params = ", ".join(f"int {p}" for p in func.params)
        lines.append(f"{ret} {func.name}({params}) {{")
        for s in func.body:
            lines.extend(_format_stmt(s, 1))
        lines.append("}")
    return "\n".join(lines) + "\n"
