"""AST for the scenario DSL.

All nodes are frozen dataclasses. Source positions are carried on every
node but excluded from equality, so a parse -> format -> parse round
trip compares structurally equal.

A program groups statements into the three canonical sections: constant
declarations, behavior definitions, and spatial (scene) statements.
Whether a top-level assignment is a constant is decided purely from the
shape of its right-hand side (see is_constant_expr), never from
declaration context, which keeps the grouping stable under reformatting.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

# Distribution constructors recognised by the grammar.
DIST_FUNCTIONS = frozenset({"Normal", "TruncatedNormal", "Uniform", "Range"})

SECTION_KINDS = ("constants", "behaviors", "spatial")


def _pos():
    return field(default=0, compare=False, kw_only=True)


# --- expressions ---------------------------------------------------------


@dataclass(frozen=True)
class NumberLit:
    value: Union[int, float]
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class StringLit:
    value: str
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class BoolLit:
    value: bool
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class Name:
    id: str
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class Attribute:
    base: "Expr"
    attr: str
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class Index:
    base: "Expr"
    index: "Expr"
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class Starred:
    value: "Expr"
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class KeywordArg:
    name: str
    value: "Expr"
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class Call:
    func: "Expr"
    args: tuple = ()
    kwargs: tuple = ()
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class Lambda:
    param: str
    body: "Expr"
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class UnaryOp:
    op: str
    operand: "Expr"
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class TupleExpr:
    items: tuple = ()
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class ListExpr:
    items: tuple = ()
    line: int = _pos()
    col: int = _pos()


# --- specifiers and the new-expression ------------------------------------


@dataclass(frozen=True)
class AtSpecifier:
    position: "Expr"
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class OnSpecifier:
    region: "Expr"
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class FollowingSpecifier:
    start: "Expr"
    distance: "Expr"
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class WithSpecifier:
    name: str
    value: "Expr"
    line: int = _pos()
    col: int = _pos()


Specifier = Union[AtSpecifier, OnSpecifier, FollowingSpecifier, WithSpecifier]


@dataclass(frozen=True)
class NewExpr:
    class_name: str
    specifiers: tuple = ()
    line: int = _pos()
    col: int = _pos()


Expr = Union[
    NumberLit, StringLit, BoolLit, Name, Attribute, Index, Starred,
    Call, Lambda, UnaryOp, BinOp, TupleExpr, ListExpr, NewExpr,
]


# --- statements ------------------------------------------------------------


@dataclass(frozen=True)
class ConstantDecl:
    name: str
    value: Expr
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class TakeStmt:
    actions: tuple
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class WaitStmt:
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class DoStmt:
    call: Expr  # Name or Call of a Name
    line: int = _pos()
    col: int = _pos()

    @property
    def target(self) -> str:
        node = self.call
        if isinstance(node, Call) and isinstance(node.func, Name):
            return node.func.id
        if isinstance(node, Name):
            return node.id
        return ""


@dataclass(frozen=True)
class InterruptWhen:
    condition: Expr
    body: tuple
    line: int = _pos()
    col: int = _pos()


BehaviorStmt = Union[TakeStmt, WaitStmt, DoStmt, InterruptWhen]


@dataclass(frozen=True)
class BehaviorDef:
    name: str
    params: tuple
    body: tuple
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class Assign:
    name: str
    value: Expr
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class ObjectDecl:
    name: str
    value: NewExpr
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class RequireStmt:
    condition: Expr
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class TerminateWhen:
    condition: Expr
    line: int = _pos()
    col: int = _pos()


SpatialStmt = Union[Assign, ObjectDecl, RequireStmt, TerminateWhen]
Statement = Union[ConstantDecl, BehaviorDef, SpatialStmt]


@dataclass(frozen=True)
class Program:
    constants: tuple = ()
    behaviors: tuple = ()
    spatial: tuple = ()

    def statements(self) -> tuple:
        return self.constants + self.behaviors + self.spatial


def is_constant_expr(expr: Expr) -> bool:
    """True when an expression is constant-grade: literals, arithmetic
    over constants, and distribution calls with constant arguments.

    Name references are deliberately not constant-grade so the decision
    depends only on local shape.
    """
    if isinstance(expr, (NumberLit, StringLit, BoolLit)):
        return True
    if isinstance(expr, UnaryOp):
        return expr.op in ("+", "-") and is_constant_expr(expr.operand)
    if isinstance(expr, BinOp):
        return expr.op in ("+", "-", "*", "/") and (
            is_constant_expr(expr.left) and is_constant_expr(expr.right)
        )
    if isinstance(expr, Call):
        return (
            isinstance(expr.func, Name)
            and expr.func.id in DIST_FUNCTIONS
            and not expr.kwargs
            and all(
                not isinstance(a, Starred) and is_constant_expr(a)
                for a in expr.args
            )
        )
    return False
