"""Static checking for MiniSpec modules.

``nat`` is a subtype of ``int``.  Widening is silent; narrowing from ``int``
to ``nat`` is also accepted here because it becomes a proof obligation.
"""

from __future__ import annotations

from typing import Optional

from . import ast as A
from .parser import Diagnostic

RESULT = "RESULT"


def compatible(actual: Optional[str], expected: str) -> bool:
    """Whether a value of type ``actual`` may flow where ``expected`` is required."""
    if actual is None:
        return True  # already reported
    if expected == A.BOOL or actual == A.BOOL:
        return actual == expected
    return True


def _numeric(t: Optional[str]) -> bool:
    return t in (A.INT, A.NAT)


def _join(a: Optional[str], b: Optional[str]) -> Optional[str]:
    if a is None or b is None:
        return a or b
    if a == b:
        return a
    if _numeric(a) and _numeric(b):
        return A.INT
    return None


class TypeChecker:
    def __init__(self, module: A.Module):
        self.module = module
        self.diagnostics: list = []

    def report(self, span: A.Span, message: str) -> None:
        self.diagnostics.append(Diagnostic(span, message))

    def infer(self, e: A.Expr, env: dict) -> Optional[str]:
        """Static type of ``e`` under ``env``; ``None`` after a reported error."""
        if isinstance(e, A.IntLit):
            return A.NAT if e.value >= 0 else A.INT
        if isinstance(e, A.BoolLit):
            return A.BOOL
        if isinstance(e, A.Var):
            if e.name not in env:
                self.report(e.span, f"unknown variable '{e.name}'")
                return None
            return env[e.name]
        if isinstance(e, A.Unary):
            t = self.infer(e.operand, env)
            if e.op == "not":
                self.expect(e.operand, t, A.BOOL)
                return A.BOOL
            self.expect(e.operand, t, A.INT)
            return A.INT
        if isinstance(e, A.Binary):
            return self._binary(e, env)
        if isinstance(e, A.If):
            self.expect(e.cond, self.infer(e.cond, env), A.BOOL)
            t1 = self.infer(e.then, env)
            t2 = self.infer(e.orelse, env)
            joined = _join(t1, t2)
            if joined is None and t1 is not None and t2 is not None:
                self.report(e.span, f"branches have incompatible types {t1} and {t2}")
            return joined
        if isinstance(e, A.Let):
            t = self.infer(e.value, env)
            return self.infer(e.body, {**env, e.name: t})
        if isinstance(e, A.Call):
            f = self.module.function(e.func)
            if f is None:
                self.report(e.span, f"unknown function '{e.func}'")
                for a in e.args:
                    self.infer(a, env)
                return None
            if len(e.args) != len(f.params):
                self.report(e.span, f"'{f.name}' expects {len(f.params)} argument(s), got {len(e.args)}")
            for a, p in zip(e.args, f.params):
                self.expect(a, self.infer(a, env), p.type)
            for a in e.args[len(f.params):]:
                self.infer(a, env)
            return f.ret
        raise TypeError(f"not an expression: {e!r}")

    def _binary(self, e: A.Binary, env: dict) -> Optional[str]:
        lt = self.infer(e.left, env)
        rt = self.infer(e.right, env)
        op = e.op
        if op in A.LOGIC_OPS:
            self.expect(e.left, lt, A.BOOL)
            self.expect(e.right, rt, A.BOOL)
            return A.BOOL
        if op in A.ORDER_OPS:
            self.expect(e.left, lt, A.INT)
            self.expect(e.right, rt, A.INT)
            return A.BOOL
        if op in A.EQ_OPS:
            if lt is not None and rt is not None and _join(lt, rt) is None:
                self.report(e.span, f"cannot compare {lt} with {rt}")
            return A.BOOL
        self.expect(e.left, lt, A.INT)
        self.expect(e.right, rt, A.INT)
        if op in ("+", "*", "/", "mod") and lt == A.NAT and rt == A.NAT:
            return A.NAT
        return A.INT

    def expect(self, e: A.Expr, actual: Optional[str], expected: str) -> None:
        if not compatible(actual, expected):
            self.report(e.span, f"expected {expected}, found {actual}")

    # -- definitions ----------------------------------------------------------

    def check(self) -> list:
        seen: dict = {}
        for d in self.module.defs:
            if d.name in seen:
                self.report(d.span, f"duplicate definition '{d.name}'")
            seen[d.name] = d
            if isinstance(d, A.FuncDef):
                self.check_function(d)
            elif isinstance(d, A.LemmaDef):
                self.check_lemma(d)
            else:
                self.check_trace(d)
        return self.diagnostics

    def check_function(self, f: A.FuncDef) -> None:
        env: dict = {}
        for p in f.params:
            if p.name in env:
                self.report(p.span, f"duplicate parameter '{p.name}'")
            env[p.name] = p.type
        self.expect(f.body, self.infer(f.body, env), f.ret)
        if f.pre is not None:
            t = self.infer(f.pre, env)
            if t is not None and t != A.BOOL:
                self.report(f.pre.span, "precondition must be boolean")
        if f.post is not None:
            t = self.infer(f.post, {**env, RESULT: f.ret})
            if t is not None and t != A.BOOL:
                self.report(f.post.span, "postcondition must be boolean")

    def check_lemma(self, lemma: A.LemmaDef) -> None:
        env = lemma_variables(self.module, lemma.body)
        t = self.infer(lemma.body, env)
        if t is not None and t != A.BOOL:
            self.report(lemma.body.span, "lemma must be boolean")

    def check_trace(self, trace: A.TraceDef) -> None:
        self._trace(trace.body, {})

    def _trace(self, t: A.TraceExpr, env: dict) -> None:
        if isinstance(t, A.TCall):
            f = self.module.function(t.func)
            if f is None:
                self.report(t.span, f"unknown function '{t.func}'")
                return
            if len(t.args) != len(f.params):
                self.report(t.span, f"'{f.name}' expects {len(f.params)} argument(s), got {len(t.args)}")
                return
            for a, p in zip(t.args, f.params):
                if isinstance(a, A.Var):
                    if a.name not in env:
                        self.report(a.span, f"unbound trace variable '{a.name}'")
                        continue
                    values = env[a.name]
                else:
                    values = [a]
                for v in values:
                    if not _literal_fits(v, p.type):
                        self.report(a.span, f"argument {v.value!r} does not fit parameter type {p.type}")
        elif isinstance(t, (A.TSeq, A.TAlt)):
            for item in t.items:
                self._trace(item, env)
        elif isinstance(t, A.TRep):
            self._trace(t.body, env)
        elif isinstance(t, A.TLet):
            kinds = {type(v) for v in t.values}
            if len(kinds) > 1:
                self.report(t.span, f"binding set for '{t.name}' mixes types")
            self._trace(t.body, {**env, t.name: list(t.values)})


def _literal_fits(v: A.Literal, ty: str) -> bool:
    if isinstance(v, A.BoolLit):
        return ty == A.BOOL
    if ty == A.BOOL:
        return False
    return ty == A.INT or v.value >= 0


class _TVar:
    __slots__ = ("ref",)

    def __init__(self) -> None:
        self.ref = None


def _find(t):
    while isinstance(t, _TVar) and t.ref is not None:
        t = t.ref
    return t


def _unify(a, b) -> None:
    a, b = _find(a), _find(b)
    if a is b or a is None or b is None:
        return
    if isinstance(a, _TVar):
        a.ref = b
    elif isinstance(b, _TVar):
        b.ref = a


def lemma_variables(module: A.Module, body: A.Expr) -> dict:
    """Infer types of a lemma's implicitly quantified variables (default bool)."""
    tvars: dict = {}

    def go(e: A.Expr, scope: dict):
        if isinstance(e, A.IntLit):
            return A.INT
        if isinstance(e, A.BoolLit):
            return A.BOOL
        if isinstance(e, A.Var):
            if e.name in scope:
                return scope[e.name]
            return tvars.setdefault(e.name, _TVar())
        if isinstance(e, A.Unary):
            want = A.BOOL if e.op == "not" else A.INT
            _unify(go(e.operand, scope), want)
            return want
        if isinstance(e, A.Binary):
            lt, rt = go(e.left, scope), go(e.right, scope)
            if e.op in A.LOGIC_OPS:
                _unify(lt, A.BOOL)
                _unify(rt, A.BOOL)
                return A.BOOL
            if e.op in A.EQ_OPS:
                _unify(lt, rt)
                return A.BOOL
            _unify(lt, A.INT)
            _unify(rt, A.INT)
            return A.BOOL if e.op in A.ORDER_OPS else A.INT
        if isinstance(e, A.If):
            _unify(go(e.cond, scope), A.BOOL)
            t1 = go(e.then, scope)
            _unify(t1, go(e.orelse, scope))
            return t1
        if isinstance(e, A.Let):
            return go(e.body, {**scope, e.name: go(e.value, scope)})
        if isinstance(e, A.Call):
            f = module.function(e.func)
            for i, a in enumerate(e.args):
                t = go(a, scope)
                if f is not None and i < len(f.params):
                    _unify(t, A.BOOL if f.params[i].type == A.BOOL else A.INT)
            if f is None:
                return None
            return A.BOOL if f.ret == A.BOOL else A.INT
        return None

    go(body, {})
    out = {}
    for name, tv in tvars.items():
        t = _find(tv)
        out[name] = t if t in (A.INT, A.BOOL) else A.BOOL
    return out


def typecheck(module: A.Module) -> list:
    return TypeChecker(module).check()


def function_env(f: A.FuncDef) -> dict:
    return {p.name: p.type for p in f.params}


def static_type(module: A.Module, e: A.Expr, env: dict) -> Optional[str]:
    """Type of a well-typed expression, without collecting diagnostics."""
    return TypeChecker(module).infer(e, env)
