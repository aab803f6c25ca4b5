"""Rewriting to normal form, shared by the prover and obligation generator.

Each pass rewrites bottom-up, applying root rules at every node until none
matches; passes repeat until nothing changes.
"""

from __future__ import annotations

from typing import Optional

from .minispec import ast as A
from .minispec.evaluator import EvalError, apply_binary, apply_unary

MAX_PASSES = 1000

_ZERO = A.IntLit(0)
_ONE = A.IntLit(1)


class SimplifierDiverged(Exception):
    pass


def _lit(v) -> A.Expr:
    if isinstance(v, bool):
        return A.BoolLit(v)
    return A.IntLit(v)


def _fold(e: A.Expr) -> Optional[A.Expr]:
    lits = (A.IntLit, A.BoolLit)
    try:
        if isinstance(e, A.Unary) and isinstance(e.operand, lits):
            if (e.op == "not") != isinstance(e.operand, A.BoolLit):
                return None
            return _lit(apply_unary(e.op, e.operand.value))
        if isinstance(e, A.Binary) and isinstance(e.left, lits) and isinstance(e.right, lits):
            if type(e.left) is not type(e.right):
                return None
            want_bool = e.op in A.LOGIC_OPS
            want_int = e.op in A.ARITH_OPS or e.op in A.ORDER_OPS
            if (want_bool and not isinstance(e.left, A.BoolLit)) or (
                want_int and not isinstance(e.left, A.IntLit)
            ):
                return None
            return _lit(apply_binary(e.op, e.left.value, e.right.value))
    except EvalError:
        return None
    return None


def rewrite_root(e: A.Expr) -> Optional[A.Expr]:
    """One rule application at the root of ``e``, or ``None``."""
    folded = _fold(e)
    if folded is not None:
        return folded
    if isinstance(e, A.Unary):
        if e.op == "not" and isinstance(e.operand, A.Unary) and e.operand.op == "not":
            return e.operand.operand
        return None
    if not isinstance(e, A.Binary):
        return None
    op, l, r = e.op, e.left, e.right
    if op == "+":
        if r == _ZERO:
            return l
        if l == _ZERO:
            return r
    elif op == "*":
        if r == _ONE:
            return l
        if l == _ONE:
            return r
        if r == _ZERO or l == _ZERO:
            return _ZERO
    elif op == "and":
        if r == A.TRUE:
            return l
        if l == A.TRUE:
            return r
        if r == A.FALSE or l == A.FALSE:
            return A.FALSE
    elif op == "or":
        if r == A.FALSE:
            return l
        if l == A.FALSE:
            return r
        if r == A.TRUE or l == A.TRUE:
            return A.TRUE
    elif op == "=>":
        if l == A.TRUE:
            return r
        if r == A.TRUE or l == A.FALSE:
            return A.TRUE
        if l == r:
            return A.TRUE
    elif op == "=":
        if l == r:
            return A.TRUE
    elif op == "<>":
        return A.Unary("not", A.Binary("=", l, r))
    return None


def _rebuild(e: A.Expr, kids: list) -> A.Expr:
    if isinstance(e, A.Unary):
        return A.Unary(e.op, kids[0])
    if isinstance(e, A.Binary):
        return A.Binary(e.op, kids[0], kids[1])
    if isinstance(e, A.If):
        return A.If(*kids)
    if isinstance(e, A.Let):
        return A.Let(e.name, kids[0], kids[1])
    if isinstance(e, A.Call):
        return A.Call(e.func, tuple(kids))
    return e


def simplify_pass(e: A.Expr) -> A.Expr:
    kids = [simplify_pass(c) for c in A.children(e)]
    if kids:
        e = _rebuild(e, kids)
    while True:
        r = rewrite_root(e)
        if r is None:
            return e
        e = r


def simplify(e: A.Expr, max_passes: int = MAX_PASSES) -> A.Expr:
    for _ in range(max_passes):
        nxt = simplify_pass(e)
        if nxt == e:
            return nxt
        e = nxt
    raise SimplifierDiverged(f"no fixpoint after {max_passes} passes")


def weight(e: A.Expr) -> int:
    """Termination measure: node count with ``<>`` counted three times."""
    return sum(3 if isinstance(n, A.Binary) and n.op == "<>" else 1 for n in A.walk(e))
