"""Immutable syntax trees for MiniSpec.

Source spans are carried on every node but excluded from equality, so two
trees parsed from differently formatted text compare equal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Optional, Union


class Pos(NamedTuple):
    line: int
    character: int


class Span(NamedTuple):
    start: Pos
    end: Pos


NO_SPAN = Span(Pos(0, 0), Pos(0, 0))


def _span() -> Span:
    return field(default=NO_SPAN, compare=False, repr=False, kw_only=True)


INT = "int"
NAT = "nat"
BOOL = "bool"
TYPES = (INT, NAT, BOOL)

INT_MIN = -(2**63)
INT_MAX = 2**63 - 1


# -- expressions ------------------------------------------------------------


@dataclass(frozen=True)
class IntLit:
    value: int
    span: Span = _span()


@dataclass(frozen=True)
class BoolLit:
    value: bool
    span: Span = _span()


@dataclass(frozen=True)
class Var:
    name: str
    span: Span = _span()


@dataclass(frozen=True)
class Unary:
    op: str  # "-" or "not"
    operand: "Expr"
    span: Span = _span()


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"
    span: Span = _span()


@dataclass(frozen=True)
class If:
    cond: "Expr"
    then: "Expr"
    orelse: "Expr"
    span: Span = _span()


@dataclass(frozen=True)
class Let:
    name: str
    value: "Expr"
    body: "Expr"
    span: Span = _span()


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple
    span: Span = _span()


Expr = Union[IntLit, BoolLit, Var, Unary, Binary, If, Let, Call]
Literal = Union[IntLit, BoolLit]

ARITH_OPS = ("+", "-", "*", "/", "mod")
ORDER_OPS = ("<", "<=", ">", ">=")
EQ_OPS = ("=", "<>")
LOGIC_OPS = ("and", "or", "=>")

TRUE = BoolLit(True)
FALSE = BoolLit(False)


# -- traces -----------------------------------------------------------------


@dataclass(frozen=True)
class TCall:
    func: str
    args: tuple  # of IntLit | BoolLit | Var
    span: Span = _span()


@dataclass(frozen=True)
class TSeq:
    items: tuple
    span: Span = _span()


@dataclass(frozen=True)
class TAlt:
    items: tuple
    span: Span = _span()


@dataclass(frozen=True)
class TRep:
    body: "TraceExpr"
    lo: int
    hi: int
    span: Span = _span()


@dataclass(frozen=True)
class TLet:
    name: str
    values: tuple  # of IntLit | BoolLit
    body: "TraceExpr"
    span: Span = _span()


TraceExpr = Union[TCall, TSeq, TAlt, TRep, TLet]


# -- definitions ------------------------------------------------------------


@dataclass(frozen=True)
class Param:
    name: str
    type: str
    span: Span = _span()


@dataclass(frozen=True)
class FuncDef:
    name: str
    params: tuple
    ret: str
    body: Expr
    pre: Optional[Expr] = None
    post: Optional[Expr] = None
    span: Span = _span()

    def param_types(self) -> dict:
        return {p.name: p.type for p in self.params}


@dataclass(frozen=True)
class TraceDef:
    name: str
    body: TraceExpr
    span: Span = _span()


@dataclass(frozen=True)
class LemmaDef:
    name: str
    body: Expr
    span: Span = _span()


Definition = Union[FuncDef, TraceDef, LemmaDef]


@dataclass(frozen=True)
class Module:
    name: str
    defs: tuple
    span: Span = _span()

    @property
    def functions(self) -> list:
        return [d for d in self.defs if isinstance(d, FuncDef)]

    @property
    def traces(self) -> list:
        return [d for d in self.defs if isinstance(d, TraceDef)]

    @property
    def lemmas(self) -> list:
        return [d for d in self.defs if isinstance(d, LemmaDef)]

    def function(self, name: str) -> Optional[FuncDef]:
        for d in self.defs:
            if isinstance(d, FuncDef) and d.name == name:
                return d
        return None

    def trace(self, name: str) -> Optional[TraceDef]:
        for d in self.defs:
            if isinstance(d, TraceDef) and d.name == name:
                return d
        return None

    def lemma(self, name: str) -> Optional[LemmaDef]:
        for d in self.defs:
            if isinstance(d, LemmaDef) and d.name == name:
                return d
        return None


# -- generic traversal --------------------------------------------------------


def children(e: Expr) -> tuple:
    if isinstance(e, Unary):
        return (e.operand,)
    if isinstance(e, Binary):
        return (e.left, e.right)
    if isinstance(e, If):
        return (e.cond, e.then, e.orelse)
    if isinstance(e, Let):
        return (e.value, e.body)
    if isinstance(e, Call):
        return e.args
    return ()


def walk(e: Expr) -> Iterator[Expr]:
    """Pre-order, left to right."""
    yield e
    for c in children(e):
        yield from walk(c)


def size(e: Expr) -> int:
    return sum(1 for _ in walk(e))


def free_vars(e: Expr) -> list:
    """Free variable names in order of first occurrence."""
    out: list = []

    def go(x: Expr, bound: frozenset) -> None:
        if isinstance(x, Var):
            if x.name not in bound and x.name not in out:
                out.append(x.name)
        elif isinstance(x, Let):
            go(x.value, bound)
            go(x.body, bound | {x.name})
        else:
            for c in children(x):
                go(c, bound)

    go(e, frozenset())
    return out


def _fresh(base: str, avoid: set) -> str:
    i = 1
    while f"{base}_{i}" in avoid:
        i += 1
    return f"{base}_{i}"


def substitute(e: Expr, mapping: dict) -> Expr:
    """Capture-avoiding substitution of free variables."""
    if not mapping:
        return e
    if isinstance(e, Var):
        return mapping.get(e.name, e)
    if isinstance(e, (IntLit, BoolLit)):
        return e
    if isinstance(e, Unary):
        return Unary(e.op, substitute(e.operand, mapping), span=e.span)
    if isinstance(e, Binary):
        return Binary(e.op, substitute(e.left, mapping), substitute(e.right, mapping), span=e.span)
    if isinstance(e, If):
        return If(
            substitute(e.cond, mapping),
            substitute(e.then, mapping),
            substitute(e.orelse, mapping),
            span=e.span,
        )
    if isinstance(e, Call):
        return Call(e.func, tuple(substitute(a, mapping) for a in e.args), span=e.span)
    if isinstance(e, Let):
        value = substitute(e.value, mapping)
        inner = {k: v for k, v in mapping.items() if k != e.name}
        name, body = e.name, e.body
        captured = set()
        for v in inner.values():
            captured.update(free_vars(v))
        if name in captured:
            avoid = captured | set(free_vars(body)) | set(inner)
            fresh = _fresh(name, avoid)
            body = substitute(body, {name: Var(fresh)})
            name = fresh
        return Let(name, value, substitute(body, inner), span=e.span)
    raise TypeError(f"not an expression: {e!r}")


def conjoin(parts: list) -> Expr:
    if not parts:
        return TRUE
    out = parts[0]
    for p in parts[1:]:
        out = Binary("and", out, p)
    return out


def implies(assumptions: list, goal: Expr) -> Expr:
    if not assumptions:
        return goal
    return Binary("=>", conjoin(assumptions), goal)
