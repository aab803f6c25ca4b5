"""Recursive-descent parser for MiniSpec.

Expression precedence, loosest first: ``=>`` (right), ``or``, ``and``,
``not``, comparisons (non-associative), ``+ -``, ``* / mod``, unary ``-``,
then calls and atoms.  ``if`` and ``let`` extend as far right as possible.

Trace precedence, loosest first: ``|``, ``;``, postfix ``{n,m}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import ast as A
from .ast import Pos, Span
from .lexer import LexError, Token, tokenize

COMPARISONS = ("=", "<>", "<", "<=", ">", ">=")


@dataclass(frozen=True)
class Diagnostic:
    span: Span
    message: str
    severity: int = 1  # LSP DiagnosticSeverity.Error


class ParseError(Exception):
    def __init__(self, message: str, span: Span):
        super().__init__(message)
        self.span = span


def _join(a: Span, b: Span) -> Span:
    return Span(a.start, b.end)


class Parser:
    def __init__(self, tokens: list):
        self.tokens = tokens
        self.i = 0

    # -- token helpers ------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def advance(self) -> Token:
        t = self.tokens[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def at(self, text: str) -> bool:
        return self.tok.is_(text)

    def accept(self, text: str) -> Optional[Token]:
        if self.at(text):
            return self.advance()
        return None

    def error(self, expected: str) -> ParseError:
        t = self.tok
        found = "end of input" if t.kind == "eof" else repr(t.text)
        return ParseError(f"expected {expected}, found {found}", t.span)

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.error(repr(text))
        return self.advance()

    def ident(self, what: str = "identifier") -> Token:
        if self.tok.kind != "ident":
            raise self.error(what)
        return self.advance()

    def prev_end(self) -> Pos:
        return self.tokens[max(self.i - 1, 0)].span.end

    # -- module -------------------------------------------------------------

    def module(self) -> A.Module:
        start = self.expect("module").span
        name = self.ident("module name").text
        defs = []
        while not self.at("end"):
            defs.append(self.definition())
        end = self.expect("end").span
        if self.tok.kind != "eof":
            raise self.error("end of input after 'end'")
        return A.Module(name, tuple(defs), span=_join(start, end))

    def definition(self) -> A.Definition:
        if self.at("trace"):
            start = self.advance().span
            name = self.ident("trace name").text
            self.expect("=")
            body = self.trace_expr()
            return A.TraceDef(name, body, span=_join(start, body.span))
        if self.at("lemma"):
            start = self.advance().span
            name = self.ident("lemma name").text
            self.expect(":")
            body = self.expr()
            return A.LemmaDef(name, body, span=_join(start, body.span))
        if self.tok.kind == "ident":
            return self.function()
        raise self.error("definition or 'end'")

    def type_name(self) -> str:
        for t in A.TYPES:
            if self.accept(t):
                return t
        raise self.error("type (int, nat or bool)")

    def function(self) -> A.FuncDef:
        name_tok = self.ident()
        self.expect("(")
        params = []
        if not self.at(")"):
            while True:
                p = self.ident("parameter name")
                self.expect(":")
                ty = self.type_name()
                params.append(A.Param(p.text, ty, span=Span(p.span.start, self.prev_end())))
                if not self.accept(","):
                    break
        self.expect(")")
        self.expect(":")
        ret = self.type_name()
        self.expect("==")
        body = self.expr()
        pre = post = None
        end = body.span
        if self.accept("pre"):
            pre = self.expr()
            end = pre.span
        if self.accept("post"):
            post = self.expr()
            end = post.span
        return A.FuncDef(name_tok.text, tuple(params), ret, body, pre, post,
                         span=_join(name_tok.span, end))

    # -- expressions --------------------------------------------------------

    def expr(self) -> A.Expr:
        return self.implies()

    def implies(self) -> A.Expr:
        left = self.or_expr()
        if self.accept("=>"):
            right = self.implies()
            return A.Binary("=>", left, right, span=_join(left.span, right.span))
        return left

    def _left_assoc(self, ops: tuple, operand) -> A.Expr:
        left = operand()
        while self.tok.kind in ("kw", "sym") and self.tok.text in ops:
            op = self.advance().text
            right = operand()
            left = A.Binary(op, left, right, span=_join(left.span, right.span))
        return left

    def or_expr(self) -> A.Expr:
        return self._left_assoc(("or",), self.and_expr)

    def and_expr(self) -> A.Expr:
        return self._left_assoc(("and",), self.not_expr)

    def not_expr(self) -> A.Expr:
        if self.at("not"):
            start = self.advance().span
            operand = self.not_expr()
            return A.Unary("not", operand, span=_join(start, operand.span))
        return self.comparison()

    def comparison(self) -> A.Expr:
        left = self.additive()
        if self.tok.kind == "sym" and self.tok.text in COMPARISONS:
            op = self.advance().text
            right = self.additive()
            if self.tok.kind == "sym" and self.tok.text in COMPARISONS:
                raise ParseError("comparison operators do not associate; add parentheses",
                                 self.tok.span)
            return A.Binary(op, left, right, span=_join(left.span, right.span))
        return left

    def additive(self) -> A.Expr:
        return self._left_assoc(("+", "-"), self.multiplicative)

    def multiplicative(self) -> A.Expr:
        return self._left_assoc(("*", "/", "mod"), self.unary)

    def unary(self) -> A.Expr:
        if self.at("-"):
            start = self.advance().span
            if self.tok.kind == "int":
                t = self.advance()
                return A.IntLit(self._int_value(t, negative=True), span=_join(start, t.span))
            operand = self.unary()
            return A.Unary("-", operand, span=_join(start, operand.span))
        return self.primary()

    def _int_value(self, t: Token, negative: bool = False) -> int:
        value = -int(t.text) if negative else int(t.text)
        if not A.INT_MIN <= value <= A.INT_MAX:
            raise ParseError("integer literal out of 64-bit range", t.span)
        return value

    def primary(self) -> A.Expr:
        t = self.tok
        if t.kind == "int":
            self.advance()
            return A.IntLit(self._int_value(t), span=t.span)
        if self.at("true") or self.at("false"):
            self.advance()
            return A.BoolLit(t.text == "true", span=t.span)
        if t.kind == "ident":
            self.advance()
            if self.accept("("):
                args = []
                if not self.at(")"):
                    args.append(self.expr())
                    while self.accept(","):
                        args.append(self.expr())
                end = self.expect(")").span
                return A.Call(t.text, tuple(args), span=_join(t.span, end))
            return A.Var(t.text, span=t.span)
        if self.at("("):
            self.advance()
            inner = self.expr()
            self.expect(")")
            return inner
        if self.at("if"):
            self.advance()
            cond = self.expr()
            self.expect("then")
            then = self.expr()
            self.expect("else")
            orelse = self.expr()
            return A.If(cond, then, orelse, span=_join(t.span, orelse.span))
        if self.at("let"):
            self.advance()
            name = self.ident("let variable").text
            self.expect("=")
            value = self.expr()
            self.expect("in")
            body = self.expr()
            return A.Let(name, value, body, span=_join(t.span, body.span))
        raise self.error("expression")

    # -- traces -------------------------------------------------------------

    def trace_expr(self) -> A.TraceExpr:
        first = self.trace_seq()
        items = [first]
        while self.accept("|"):
            items.append(self.trace_seq())
        if len(items) == 1:
            return first
        return A.TAlt(tuple(items), span=_join(items[0].span, items[-1].span))

    def trace_seq(self) -> A.TraceExpr:
        first = self.trace_rep()
        items = [first]
        while self.accept(";"):
            items.append(self.trace_rep())
        if len(items) == 1:
            return first
        return A.TSeq(tuple(items), span=_join(items[0].span, items[-1].span))

    def _nat_literal(self) -> int:
        if self.tok.kind != "int":
            raise self.error("natural number")
        return self._int_value(self.advance())

    def trace_rep(self) -> A.TraceExpr:
        body = self.trace_atom()
        while self.at("{"):
            start = self.advance().span
            lo = self._nat_literal()
            self.expect(",")
            hi = self._nat_literal()
            end = self.expect("}").span
            if lo > hi:
                raise ParseError(f"repetition bounds {{{lo},{hi}}} are decreasing",
                                 _join(start, end))
            body = A.TRep(body, lo, hi, span=_join(body.span, end))
        return body

    def trace_literal(self) -> A.Literal:
        t = self.tok
        if self.at("-"):
            start = self.advance().span
            if self.tok.kind != "int":
                raise self.error("integer literal")
            it = self.advance()
            return A.IntLit(self._int_value(it, negative=True), span=_join(start, it.span))
        if t.kind == "int":
            self.advance()
            return A.IntLit(self._int_value(t), span=t.span)
        if self.at("true") or self.at("false"):
            self.advance()
            return A.BoolLit(t.text == "true", span=t.span)
        raise self.error("literal")

    def trace_atom(self) -> A.TraceExpr:
        t = self.tok
        if self.at("("):
            self.advance()
            inner = self.trace_expr()
            self.expect(")")
            return inner
        if self.at("let"):
            self.advance()
            name = self.ident("binding variable").text
            self.expect("in")
            self.expect("{")
            values = [self.trace_literal()]
            while self.accept(","):
                values.append(self.trace_literal())
            self.expect("}")
            self.expect(".")
            body = self.trace_expr()
            return A.TLet(name, tuple(values), body, span=_join(t.span, body.span))
        if t.kind == "ident":
            self.advance()
            self.expect("(")
            args = []
            if not self.at(")"):
                while True:
                    if self.tok.kind == "ident":
                        v = self.advance()
                        args.append(A.Var(v.text, span=v.span))
                    else:
                        args.append(self.trace_literal())
                    if not self.accept(","):
                        break
            end = self.expect(")").span
            return A.TCall(t.text, tuple(args), span=_join(t.span, end))
        raise self.error("trace call, '(' or 'let'")


def parse(text: str, uri: str = "") -> tuple:
    """Parse one module.  Returns ``(module or None, diagnostics)``; never raises."""
    try:
        tokens = tokenize(text)
        module = Parser(tokens).module()
    except (LexError, ParseError) as exc:
        return None, [Diagnostic(exc.span, str(exc))]
    except RecursionError:
        return None, [Diagnostic(A.NO_SPAN, "expression nesting too deep")]
    return module, []


def parse_expr(text: str) -> A.Expr:
    """Parse a standalone expression; raises ``ParseError``/``LexError``."""
    p = Parser(tokenize(text))
    e = p.expr()
    if p.tok.kind != "eof":
        raise p.error("end of expression")
    return e


def parse_trace(text: str) -> A.TraceExpr:
    p = Parser(tokenize(text))
    t = p.trace_expr()
    if p.tok.kind != "eof":
        raise p.error("end of trace")
    return t
