"""Document translation of MiniSpec modules (LaTeX and Markdown)."""

from __future__ import annotations

import os
from pathlib import Path

from .minispec import ast as A
from .minispec.printer import (
    ATOM_LEVEL,
    BINARY_CONTEXT,
    definition_text,
    precedence,
    trace_text,
)
from .protocol import INTERNAL_ERROR, INVALID_PARAMS, RpcError
from .workspace import path_to_uri, uri_to_path

LATEX_PREAMBLE = r"""\documentclass{article}
\usepackage{amsmath}
\usepackage{amssymb}
\begin{document}
"""

LATEX_OPERATORS = {
    "=>": r"\Rightarrow",
    "or": r"\lor",
    "and": r"\land",
    "=": "=",
    "<>": r"\neq",
    "<": "<",
    "<=": r"\leq",
    ">": ">",
    ">=": r"\geq",
    "+": "+",
    "-": "-",
    "*": r"\times",
    "/": r"\div",
    "mod": r"\bmod",
}

LATEX_TYPES = {A.INT: r"\mathbb{Z}", A.NAT: r"\mathbb{N}", A.BOOL: r"\mathbb{B}"}

_KIND = {A.FuncDef: "Function", A.TraceDef: "Trace", A.LemmaDef: "Lemma"}


def _tex_escape(text: str) -> str:
    return text.replace("\\", r"\textbackslash{}").replace("_", r"\_").replace("&", r"\&") \
        .replace("%", r"\%").replace("$", r"\$").replace("#", r"\#")


def _ident(name: str) -> str:
    return r"\mathit{" + name.replace("_", r"\_") + "}"


def latex_expr(e: A.Expr, ctx: int = 0) -> str:
    text = _latex(e)
    if precedence(e) < ctx:
        return rf"\left({text}\right)"
    return text


def _latex(e: A.Expr) -> str:
    if isinstance(e, A.IntLit):
        return str(e.value)
    if isinstance(e, A.BoolLit):
        return r"\mathbf{true}" if e.value else r"\mathbf{false}"
    if isinstance(e, A.Var):
        return _ident(e.name)
    if isinstance(e, A.Call):
        return f"{_ident(e.func)}({', '.join(latex_expr(a) for a in e.args)})"
    if isinstance(e, A.Unary):
        if e.op == "not":
            return rf"\lnot {latex_expr(e.operand, ATOM_LEVEL)}"
        return f"-{latex_expr(e.operand, ATOM_LEVEL)}"
    if isinstance(e, A.Binary):
        _, lctx, rctx = BINARY_CONTEXT[e.op]
        return f"{latex_expr(e.left, lctx)} {LATEX_OPERATORS[e.op]} {latex_expr(e.right, rctx)}"
    if isinstance(e, A.If):
        return (rf"\mathbf{{if}}\ {latex_expr(e.cond)}\ \mathbf{{then}}\ {latex_expr(e.then)}"
                rf"\ \mathbf{{else}}\ {latex_expr(e.orelse)}")
    if isinstance(e, A.Let):
        return (rf"\mathbf{{let}}\ {_ident(e.name)} = {latex_expr(e.value)}"
                rf"\ \mathbf{{in}}\ {latex_expr(e.body)}")
    raise TypeError(f"not an expression: {e!r}")


def latex_module(m: A.Module) -> str:
    out = [LATEX_PREAMBLE, f"\\title{{Module \\texttt{{{_tex_escape(m.name)}}}}}\n\\date{{}}\n\\maketitle\n"]
    for d in m.defs:
        out.append(f"\n\\section{{{_KIND[type(d)]} \\texttt{{{_tex_escape(d.name)}}}}}\n")
        if isinstance(d, A.FuncDef):
            params = ", ".join(f"{_ident(p.name)} : {LATEX_TYPES[p.type]}" for p in d.params)
            out.append(
                f"\\[\n  {_ident(d.name)}({params}) : {LATEX_TYPES[d.ret]}"
                f" \\triangleq {latex_expr(d.body)}\n\\]\n"
            )
            if d.pre is not None:
                out.append(f"\\textbf{{pre}} \\( {latex_expr(d.pre)} \\)\\par\n")
            if d.post is not None:
                out.append(f"\\textbf{{post}} \\( {latex_expr(d.post)} \\)\\par\n")
        elif isinstance(d, A.LemmaDef):
            out.append(f"\\[\n  {latex_expr(d.body)}\n\\]\n")
        else:
            out.append(f"\\begin{{verbatim}}\n{trace_text(d.body)}\n\\end{{verbatim}}\n")
    out.append("\n\\end{document}\n")
    return "".join(out)


def markdown_module(m: A.Module) -> str:
    out = [f"# Module `{m.name}`\n"]
    for d in m.defs:
        out.append(f"\n## {_KIND[type(d)]} `{d.name}`\n\n```minispec\n{definition_text(d)}\n```\n")
    return "".join(out)


TRANSLATORS = {
    "latex": (".tex", latex_module),
    "markdown": (".md", markdown_module),
}


def translate(files: list, language_id: str, save_uri: str) -> str:
    """Write one document per module into ``save_uri``; returns the main document's uri."""
    if language_id not in TRANSLATORS:
        raise RpcError(INVALID_PARAMS, f"unknown languageId '{language_id}'; "
                       f"supported: {', '.join(sorted(TRANSLATORS))}")
    if not files:
        raise RpcError(INVALID_PARAMS, "nothing to translate")
    errors = [f.uri for f in files if not f.ok]
    if errors:
        raise RpcError(INTERNAL_ERROR, "the specification has errors", {"uris": errors})
    save_dir = uri_to_path(save_uri)
    if not save_dir.is_dir() or not os.access(save_dir, os.W_OK):
        raise RpcError(INTERNAL_ERROR, f"{save_uri} is not a writable directory")
    ext, render = TRANSLATORS[language_id]
    written: list = []
    try:
        for f in files:
            target = Path(save_dir) / f"{f.module.name}{ext}"
            target.write_bytes(render(f.module).encode("utf-8"))
            written.append(target)
    except OSError as exc:
        raise RpcError(INTERNAL_ERROR, f"cannot write translation: {exc}") from None
    return path_to_uri(written[0])
