"""Expression AST for MiniC.

Arithmetic positions hold IntLiteral/Var/BinOp/Nondet only; condition
positions hold Cmp/Not/And/Or over arithmetic operands.  The parser
guarantees these shape invariants; code here assumes them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

Expr = Union["IntLiteral", "Var", "Nondet", "BinOp", "Cmp", "Not", "And", "Or"]


@dataclass(frozen=True)
class IntLiteral:
    value: int


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Nondet:
    """Fresh unknown value; allowed only as a full assignment right-hand side."""


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - *
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Cmp:
    op: str  # one of == != < <= > >=
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Not:
    inner: Expr


@dataclass(frozen=True)
class And:
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Or:
    left: Expr
    right: Expr


_CMP_NEGATION = {
    "==": "!=",
    "!=": "==",
    "<": ">=",
    "<=": ">",
    ">": "<=",
    ">=": "<",
}


def negate_condition(cond: Expr) -> Expr:
    """Logical negation pushed down to comparison atoms.

    The result contains no Not nodes: De Morgan rewrites And/Or and
    comparison operators flip (not (a < b)  ==>  a >= b).
    """
    if isinstance(cond, Cmp):
        return Cmp(_CMP_NEGATION[cond.op], cond.left, cond.right)
    if isinstance(cond, Not):
        return to_nnf(cond.inner)
    if isinstance(cond, And):
        return Or(negate_condition(cond.left), negate_condition(cond.right))
    if isinstance(cond, Or):
        return And(negate_condition(cond.left), negate_condition(cond.right))
    raise TypeError(f"not a condition: {cond!r}")


def to_nnf(cond: Expr) -> Expr:
    """Negation normal form: no Not nodes remain."""
    if isinstance(cond, Cmp):
        return cond
    if isinstance(cond, Not):
        return negate_condition(cond.inner)
    if isinstance(cond, And):
        return And(to_nnf(cond.left), to_nnf(cond.right))
    if isinstance(cond, Or):
        return Or(to_nnf(cond.left), to_nnf(cond.right))
    raise TypeError(f"not a condition: {cond!r}")


def format_expr(e: Expr) -> str:
    """Re-parseable rendering; compound operands are parenthesized."""
    if isinstance(e, IntLiteral):
        return str(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Nondet):
        return "nondet()"
    if isinstance(e, BinOp):
        return f"({format_expr(e.left)} {e.op} {format_expr(e.right)})"
    if isinstance(e, Cmp):
        return f"({format_expr(e.left)} {e.op} {format_expr(e.right)})"
    if isinstance(e, Not):
        return f"(!{format_expr(e.inner)})"
    if isinstance(e, And):
        return f"({format_expr(e.left)} && {format_expr(e.right)})"
    if isinstance(e, Or):
        return f"({format_expr(e.left)} || {format_expr(e.right)})"
    raise TypeError(f"not an expression: {e!r}")


def expr_variables(e: Expr) -> set:
    """All variable names occurring in the expression."""
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, (IntLiteral, Nondet)):
        return set()
    if isinstance(e, (BinOp, Cmp, And, Or)):
        return expr_variables(e.left) | expr_variables(e.right)
    if isinstance(e, Not):
        return expr_variables(e.inner)
    raise TypeError(f"not an expression: {e!r}")


def eval_arith(e: Expr, lookup: Callable[[str], Optional[int]]) -> Optional[int]:
    """Evaluate an arithmetic expression; None means unknown.

    Nondet and any variable for which lookup returns None poison the
    result to None.
    """
    if isinstance(e, IntLiteral):
        return e.value
    if isinstance(e, Var):
        return lookup(e.name)
    if isinstance(e, Nondet):
        return None
    if isinstance(e, BinOp):
        lv = eval_arith(e.left, lookup)
        rv = eval_arith(e.right, lookup)
        if lv is None or rv is None:
            return None
        if e.op == "+":
            return lv + rv
        if e.op == "-":
            return lv - rv
        if e.op == "*":
            return lv * rv
        raise ValueError(f"unknown operator {e.op}")
    raise TypeError(f"not arithmetic: {e!r}")


_CMP_FN = {
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


def eval_condition(cond: Expr, lookup: Callable[[str], Optional[int]]) -> Optional[bool]:
    """Three-valued (Kleene) evaluation of a condition; None means unknown."""
    if isinstance(cond, Cmp):
        lv = eval_arith(cond.left, lookup)
        rv = eval_arith(cond.right, lookup)
        if lv is None or rv is None:
            return None
        return _CMP_FN[cond.op](lv, rv)
    if isinstance(cond, Not):
        v = eval_condition(cond.inner, lookup)
        return None if v is None else not v
    if isinstance(cond, And):
        lv = eval_condition(cond.left, lookup)
        rv = eval_condition(cond.right, lookup)
        if lv is False or rv is False:
            return False
        if lv is True and rv is True:
            return True
        return None
    if isinstance(cond, Or):
        lv = eval_condition(cond.left, lookup)
        rv = eval_condition(cond.right, lookup)
        if lv is True or rv is True:
            return True
        if lv is False and rv is False:
            return False
        return None
    raise TypeError(f"not a condition: {cond!r}")


def conjunction_atoms(cond: Expr) -> list:
    """Atoms of the top-level conjunction (the And spine)."""
    if isinstance(cond, And):
        return conjunction_atoms(cond.left) + conjunction_atoms(cond.right)
    return [cond]
