"""Proof obligation generation.

Obligation sites, visited in document order:

* ``/`` and ``mod``: the divisor is non-zero;
* a call to a function with a precondition: the precondition holds for the
  actual arguments;
* an ``int``-typed expression returned as ``nat`` or passed to a ``nat``
  parameter: the expression is non-negative.

The context of an obligation is the enclosing precondition followed by the
branch conditions (``if`` and short-circuit operators) guarding the site,
with let-bound names replaced by their values.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import schema as S
from .cancellation import NEVER, CancellationToken
from .minispec import ast as A
from .minispec.checker import RESULT, lemma_variables, static_type
from .minispec.printer import expr_text
from .simplifier import SimplifierDiverged, simplify

DIVISION_BY_ZERO = "division by zero"
PRECONDITION = "precondition satisfaction"
NAT_SUBTYPE = "nat subtype"


@dataclass(frozen=True)
class Obligation:
    kind: str
    name: str
    span: A.Span
    expr: A.Expr


class _Collector:
    def __init__(self, module: A.Module, name: str):
        self.module = module
        self.name = name
        self.out: list = []

    def emit(self, kind: str, site: A.Expr, ctx: list, goal: A.Expr) -> None:
        self.out.append(Obligation(kind, self.name, site.span, A.implies(ctx, goal)))

    def visit(self, e: A.Expr, ctx: list, env: dict, subst: dict, want_nat: bool = False) -> None:
        sub = lambda x: A.substitute(x, subst)  # noqa: E731
        if isinstance(e, A.If):
            self.visit(e.cond, ctx, env, subst)
            cond = sub(e.cond)
            self.visit(e.then, ctx + [cond], env, subst, want_nat)
            self.visit(e.orelse, ctx + [A.Unary("not", cond)], env, subst, want_nat)
            return
        if isinstance(e, A.Let):
            self.visit(e.value, ctx, env, subst)
            inner_env = {**env, e.name: static_type(self.module, e.value, env)}
            inner_subst = {**subst, e.name: sub(e.value)}
            self.visit(e.body, ctx, inner_env, inner_subst, want_nat)
            return
        if want_nat and static_type(self.module, e, env) == A.INT:
            self.emit(NAT_SUBTYPE, e, ctx, A.Binary(">=", sub(e), A.IntLit(0)))
        if isinstance(e, A.Binary):
            if e.op in ("/", "mod"):
                self.emit(DIVISION_BY_ZERO, e, ctx, A.Binary("<>", sub(e.right), A.IntLit(0)))
            self.visit(e.left, ctx, env, subst)
            left = sub(e.left)
            if e.op in ("and", "=>"):
                right_ctx = ctx + [left]
            elif e.op == "or":
                right_ctx = ctx + [A.Unary("not", left)]
            else:
                right_ctx = ctx
            self.visit(e.right, right_ctx, env, subst)
        elif isinstance(e, A.Unary):
            self.visit(e.operand, ctx, env, subst)
        elif isinstance(e, A.Call):
            f = self.module.function(e.func)
            if f.pre is not None:
                actuals = {p.name: sub(a) for p, a in zip(f.params, e.args)}
                self.emit(PRECONDITION, e, ctx, A.substitute(f.pre, actuals))
            for a, p in zip(e.args, f.params):
                self.visit(a, ctx, env, subst, want_nat=p.type == A.NAT)


def module_obligations(module: A.Module, cancel: CancellationToken = NEVER) -> list:
    out: list = []
    for d in module.defs:
        cancel.check()
        c = _Collector(module, f"{module.name}.{d.name}")
        if isinstance(d, A.FuncDef):
            env = d.param_types()
            ctx = [d.pre] if d.pre is not None else []
            c.visit(d.body, ctx, env, {}, want_nat=d.ret == A.NAT)
            if d.pre is not None:
                c.visit(d.pre, [], env, {})
            if d.post is not None:
                c.visit(d.post, ctx, {**env, RESULT: d.ret}, {RESULT: d.body})
        elif isinstance(d, A.LemmaDef):
            c.visit(d.body, [], lemma_variables(module, d.body), {})
        out.extend(c.out)
    return out


def discharged(expr: A.Expr) -> bool:
    try:
        return simplify(expr) == A.TRUE
    except SimplifierDiverged:
        return False


def generate_pos(files: list, cancel: CancellationToken = NEVER) -> list:
    """Obligations for ``files`` (already in lexicographic order), ids 1..n."""
    out: list = []
    for f in files:
        for ob in module_obligations(f.module, cancel):
            out.append(S.ProofObligation(
                id=len(out) + 1,
                kind=ob.kind,
                name=ob.name,
                location=S.Location(f.uri, S.Range.from_span(ob.span)),
                source=expr_text(ob.expr),
                proved=True if discharged(ob.expr) else None,
            ))
    return out
