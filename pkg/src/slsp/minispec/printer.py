"""Pretty-printer whose output is accepted by the parser.

Parentheses are emitted only where precedence or associativity requires
them, except that ``not`` always parenthesizes a compound operand.
"""

from __future__ import annotations

from . import ast as A

# Binding strength, loosest first.  Binary entries give (own, left ctx, right ctx).
BINARY_CONTEXT = {
    "=>": (1, 2, 1),
    "or": (2, 2, 3),
    "and": (3, 3, 4),
    "=": (5, 6, 6),
    "<>": (5, 6, 6),
    "<": (5, 6, 6),
    "<=": (5, 6, 6),
    ">": (5, 6, 6),
    ">=": (5, 6, 6),
    "+": (6, 6, 7),
    "-": (6, 6, 7),
    "*": (7, 7, 8),
    "/": (7, 7, 8),
    "mod": (7, 7, 8),
}
NOT_LEVEL = 4
NEG_LEVEL = 8
ATOM_LEVEL = 9


def precedence(e: A.Expr) -> int:
    if isinstance(e, (A.If, A.Let)):
        return 0
    if isinstance(e, A.Binary):
        return BINARY_CONTEXT[e.op][0]
    if isinstance(e, A.Unary):
        return NOT_LEVEL if e.op == "not" else NEG_LEVEL
    if isinstance(e, A.IntLit) and e.value < 0:
        return NEG_LEVEL
    return ATOM_LEVEL


def _bool(b: bool) -> str:
    return "true" if b else "false"


def literal_text(v) -> str:
    if isinstance(v, bool):
        return _bool(v)
    return str(v)


def expr_text(e: A.Expr, ctx: int = 0) -> str:
    text = _expr(e)
    if precedence(e) < ctx:
        return f"({text})"
    return text


def _expr(e: A.Expr) -> str:
    if isinstance(e, A.IntLit):
        return str(e.value)
    if isinstance(e, A.BoolLit):
        return _bool(e.value)
    if isinstance(e, A.Var):
        return e.name
    if isinstance(e, A.Call):
        return f"{e.func}({', '.join(expr_text(a) for a in e.args)})"
    if isinstance(e, A.Unary):
        if e.op == "not":
            return f"not {expr_text(e.operand, ATOM_LEVEL)}"
        inner = expr_text(e.operand, ATOM_LEVEL)
        return f"-{inner}"
    if isinstance(e, A.Binary):
        _, lctx, rctx = BINARY_CONTEXT[e.op]
        return f"{expr_text(e.left, lctx)} {e.op} {expr_text(e.right, rctx)}"
    if isinstance(e, A.If):
        return f"if {expr_text(e.cond)} then {expr_text(e.then)} else {expr_text(e.orelse)}"
    if isinstance(e, A.Let):
        return f"let {e.name} = {expr_text(e.value)} in {expr_text(e.body)}"
    raise TypeError(f"not an expression: {e!r}")


# Trace levels: alt 1, seq 2, rep 3, atom 4; let 0.
def _tlevel(t: A.TraceExpr) -> int:
    if isinstance(t, A.TLet):
        return 0
    if isinstance(t, A.TAlt):
        return 1
    if isinstance(t, A.TSeq):
        return 2
    if isinstance(t, A.TRep):
        return 3
    return 4


def call_text(func: str, args) -> str:
    """Render a call with already-evaluated literal arguments."""
    return f"{func}({', '.join(literal_text(a) for a in args)})"


def trace_text(t: A.TraceExpr, ctx: int = 0) -> str:
    text = _trace(t)
    if _tlevel(t) < ctx:
        return f"({text})"
    return text


def _trace(t: A.TraceExpr) -> str:
    if isinstance(t, A.TCall):
        return f"{t.func}({', '.join(expr_text(a) for a in t.args)})"
    if isinstance(t, A.TAlt):
        return " | ".join(trace_text(i, 2) for i in t.items)
    if isinstance(t, A.TSeq):
        return "; ".join(trace_text(i, 3) for i in t.items)
    if isinstance(t, A.TRep):
        return f"{trace_text(t.body, 4)}{{{t.lo},{t.hi}}}"
    if isinstance(t, A.TLet):
        values = ", ".join(expr_text(v) for v in t.values)
        return f"let {t.name} in {{{values}}} . {trace_text(t.body)}"
    raise TypeError(f"not a trace: {t!r}")


def signature_text(f: A.FuncDef) -> str:
    params = ", ".join(f"{p.name}: {p.type}" for p in f.params)
    return f"{f.name}({params}): {f.ret}"


def definition_text(d: A.Definition, indent: str = "") -> str:
    if isinstance(d, A.FuncDef):
        lines = [f"{indent}{signature_text(d)} == {expr_text(d.body)}"]
        if d.pre is not None:
            lines.append(f"{indent}  pre {expr_text(d.pre)}")
        if d.post is not None:
            lines.append(f"{indent}  post {expr_text(d.post)}")
        return "\n".join(lines)
    if isinstance(d, A.TraceDef):
        return f"{indent}trace {d.name} = {trace_text(d.body)}"
    if isinstance(d, A.LemmaDef):
        return f"{indent}lemma {d.name} : {expr_text(d.body)}"
    raise TypeError(f"not a definition: {d!r}")


def module_text(m: A.Module) -> str:
    lines = [f"module {m.name}"]
    lines.extend(definition_text(d, "  ") for d in m.defs)
    lines.append("end")
    return "\n".join(lines) + "\n"
