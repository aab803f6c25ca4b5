from __future__ import annotations

from dataclasses import dataclass

from .ast import Pos, Span

KEYWORDS = frozenset(
    """module end pre post trace lemma if then else let in and or not mod
    true false int nat bool""".split()
)

# Longest match first.
SYMBOLS = ("==", "=>", "<>", "<=", ">=", "<", ">", "=", "+", "-", "*", "/",
           "(", ")", ",", ":", ";", "|", "{", "}", ".")


@dataclass(frozen=True)
class Token:
    kind: str  # "ident", "int", "kw", "sym", "eof"
    text: str
    span: Span

    def is_(self, text: str) -> bool:
        return self.kind in ("kw", "sym") and self.text == text


class LexError(Exception):
    def __init__(self, message: str, span: Span):
        super().__init__(message)
        self.span = span


def tokenize(source: str) -> list:
    tokens: list = []
    i = 0
    line = 0
    col = 0
    n = len(source)

    def advance(count: int) -> None:
        nonlocal i, line, col
        for _ in range(count):
            if source[i] == "\n":
                line += 1
                col = 0
            else:
                col += 1
            i += 1

    while i < n:
        c = source[i]
        if c.isspace():
            advance(1)
            continue
        if source.startswith("--", i):
            while i < n and source[i] != "\n":
                advance(1)
            continue
        start = Pos(line, col)
        if c.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            text = source[i:j]
            advance(j - i)
            tokens.append(Token("int", text, Span(start, Pos(line, col))))
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            text = source[i:j]
            advance(j - i)
            kind = "kw" if text in KEYWORDS else "ident"
            tokens.append(Token(kind, text, Span(start, Pos(line, col))))
            continue
        for sym in SYMBOLS:
            if source.startswith(sym, i):
                advance(len(sym))
                tokens.append(Token("sym", sym, Span(start, Pos(line, col))))
                break
        else:
            raise LexError(f"unexpected character {c!r}", Span(start, Pos(line, col + 1)))
    end = Pos(line, col)
    tokens.append(Token("eof", "", Span(end, end)))
    return tokens
