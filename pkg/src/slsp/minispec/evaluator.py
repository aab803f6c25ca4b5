"""Big-step interpreter for MiniSpec expressions.

Integers are 64-bit signed with checked overflow.  ``/`` and ``mod``
truncate toward zero.  ``and``, ``or`` and ``=>`` short-circuit.
"""

from __future__ import annotations

from typing import Union

from . import ast as A
from .checker import RESULT

Value = Union[int, bool]

MAX_CALL_DEPTH = 200


class EvalError(Exception):
    """A MiniSpec runtime error; ``name`` is what test reports print."""

    name = "RuntimeError"

    def __init__(self, detail: str = ""):
        super().__init__(detail or self.name)
        self.detail = detail


class DivisionByZero(EvalError):
    name = "DivisionByZero"


class Overflow(EvalError):
    name = "Overflow"


class PreconditionViolation(EvalError):
    name = "PreconditionViolation"


class PostconditionViolation(EvalError):
    name = "PostconditionViolation"


class SubtypeViolation(EvalError):
    name = "SubtypeViolation"


class StackOverflow(EvalError):
    name = "StackOverflow"


def _check(v: int) -> int:
    if not A.INT_MIN <= v <= A.INT_MAX:
        raise Overflow()
    return v


def trunc_div(a: int, b: int) -> int:
    if b == 0:
        raise DivisionByZero()
    q = abs(a) // abs(b)
    return _check(q if (a < 0) == (b < 0) else -q)


def trunc_mod(a: int, b: int) -> int:
    if b == 0:
        raise DivisionByZero()
    r = abs(a) % abs(b)
    return -r if a < 0 else r


def apply_binary(op: str, a: Value, b: Value) -> Value:
    """Strict application of a binary operator to two values."""
    if op == "+":
        return _check(a + b)
    if op == "-":
        return _check(a - b)
    if op == "*":
        return _check(a * b)
    if op == "/":
        return trunc_div(a, b)
    if op == "mod":
        return trunc_mod(a, b)
    if op == "=":
        return a == b
    if op == "<>":
        return a != b
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    if op == ">=":
        return a >= b
    if op == "and":
        return a and b
    if op == "or":
        return a or b
    if op == "=>":
        return (not a) or b
    raise ValueError(f"unknown operator {op!r}")


def apply_unary(op: str, a: Value) -> Value:
    if op == "not":
        return not a
    return _check(-a)


def _bool_value(v: Value) -> bool:
    return v is True or v is False


def format_value(v: Value) -> str:
    if _bool_value(v):
        return "true" if v else "false"
    return str(v)


class Evaluator:
    def __init__(self, module: A.Module):
        self.module = module
        self.depth = 0

    def eval(self, e: A.Expr, env: dict) -> Value:
        if isinstance(e, A.IntLit):
            return e.value
        if isinstance(e, A.BoolLit):
            return e.value
        if isinstance(e, A.Var):
            return env[e.name]
        if isinstance(e, A.Unary):
            return apply_unary(e.op, self.eval(e.operand, env))
        if isinstance(e, A.Binary):
            left = self.eval(e.left, env)
            if e.op == "and" and not left:
                return False
            if e.op == "or" and left:
                return True
            if e.op == "=>" and not left:
                return True
            return apply_binary(e.op, left, self.eval(e.right, env))
        if isinstance(e, A.If):
            if self.eval(e.cond, env):
                return self.eval(e.then, env)
            return self.eval(e.orelse, env)
        if isinstance(e, A.Let):
            return self.eval(e.body, {**env, e.name: self.eval(e.value, env)})
        if isinstance(e, A.Call):
            f = self.module.function(e.func)
            args = [self.eval(a, env) for a in e.args]
            return self.apply(f, args)
        raise TypeError(f"not an expression: {e!r}")

    def bind(self, f: A.FuncDef, args: list) -> dict:
        for p, v in zip(f.params, args):
            if p.type == A.NAT and v < 0:
                raise SubtypeViolation(f"argument {p.name} of {f.name} is negative")
        return {p.name: v for p, v in zip(f.params, args)}

    def pre_holds(self, f: A.FuncDef, args: list) -> bool:
        if f.pre is None:
            return True
        return bool(self.eval(f.pre, self.bind(f, args)))

    def apply(self, f: A.FuncDef, args: list, check_pre: bool = True) -> Value:
        if self.depth >= MAX_CALL_DEPTH:
            raise StackOverflow(f"call depth exceeds {MAX_CALL_DEPTH}")
        self.depth += 1
        try:
            env = self.bind(f, args)
            if check_pre and f.pre is not None and not self.eval(f.pre, env):
                raise PreconditionViolation(f"precondition of {f.name} does not hold")
            result = self.eval(f.body, env)
            if f.ret == A.NAT and result < 0:
                raise SubtypeViolation(f"{f.name} returned a negative value")
            if f.post is not None and not self.eval(f.post, {**env, RESULT: result}):
                raise PostconditionViolation(f"postcondition of {f.name} does not hold")
            return result
        finally:
            self.depth -= 1


def evaluate(e: A.Expr, env: dict = None, module: A.Module = None) -> Value:
    return Evaluator(module or A.Module("_", ())).eval(e, env or {})
