"""MiniSpec: a small specification language with functions, traces and lemmas."""

from .ast import Module
from .checker import typecheck
from .evaluator import EvalError, Evaluator
from .parser import Diagnostic, parse, parse_expr, parse_trace
from .printer import expr_text, module_text, trace_text

__all__ = [
    "Diagnostic",
    "EvalError",
    "Evaluator",
    "Module",
    "expr_text",
    "module_text",
    "parse",
    "parse_expr",
    "parse_trace",
    "trace_text",
    "typecheck",
]
