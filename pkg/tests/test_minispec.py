import pytest
from hypothesis import given
from hypothesis import strategies as st

from slsp.minispec import ast as A
from slsp.minispec import expr_text, module_text, parse, parse_expr, parse_trace, trace_text, typecheck
from slsp.minispec.checker import lemma_variables
from slsp.minispec.evaluator import (
    DivisionByZero,
    Overflow,
    PostconditionViolation,
    PreconditionViolation,
    StackOverflow,
    SubtypeViolation,
    Evaluator,
    evaluate,
    trunc_div,
    trunc_mod,
)
from slsp.minispec.parser import ParseError

BINOPS = ["=>", "or", "and", "=", "<>", "<", "<=", ">", ">=", "+", "-", "*", "/", "mod"]
NAMES = st.sampled_from(["a", "b", "x", "y1", "total"])


def exprs(max_leaves=12):
    leaves = st.one_of(
        st.builds(A.IntLit, st.integers(-1000, 1000)),
        st.builds(A.BoolLit, st.booleans()),
        st.builds(A.Var, NAMES),
    )

    def extend(inner):
        neg_operand = inner.filter(lambda e: not isinstance(e, A.IntLit))
        return st.one_of(
            st.builds(A.Binary, st.sampled_from(BINOPS), inner, inner),
            st.builds(A.Unary, st.just("not"), inner),
            st.builds(A.Unary, st.just("-"), neg_operand),
            st.builds(A.If, inner, inner, inner),
            st.builds(A.Let, NAMES, inner, inner),
            st.builds(A.Call, st.sampled_from(["f", "g"]), st.lists(inner, max_size=3).map(tuple)),
        )
    return st.recursive(leaves, extend, max_leaves=max_leaves)


@given(exprs())
def test_print_parse_round_trip(e):
    assert parse_expr(expr_text(e)) == e


def traces():
    calls = st.builds(A.TCall, st.sampled_from(["op", "f"]),
                      st.lists(st.builds(A.IntLit, st.integers(-5, 5)) | st.builds(A.Var, st.just("x")),
                               max_size=2).map(tuple))

    def extend(inner):
        items = st.lists(inner, min_size=2, max_size=3).map(tuple)
        return st.one_of(
            st.builds(A.TSeq, items),
            st.builds(A.TAlt, items),
            st.builds(lambda b, lo, d: A.TRep(b, lo, lo + d), inner, st.integers(0, 2), st.integers(0, 2)),
            st.builds(A.TLet, st.just("x"), st.lists(st.builds(A.IntLit, st.integers(0, 9)),
                                                      min_size=1, max_size=3).map(tuple), inner),
        )
    return st.recursive(calls, extend, max_leaves=8)


@given(traces())
def test_trace_print_parse_round_trip(t):
    assert parse_trace(trace_text(t)) == t


@pytest.mark.parametrize("text, expected", [
    ("a or b and c", "a or (b and c)"),
    ("a => b => c", "a => (b => c)"),
    ("not a = b", "not (a = b)"),
    ("1 + 2 * 3 - 4", "(1 + (2 * 3)) - 4"),
    ("-x * y", "(-x) * y"),
    ("a mod b / c", "(a mod b) / c"),
    ("if a then 1 else 2 + 3", "if a then 1 else (2 + 3)"),
    ("x - -3", "x - (-3)"),
])
def test_precedence(text, expected):
    assert parse_expr(text) == parse_expr(expected)


def test_comparisons_do_not_chain():
    with pytest.raises(ParseError):
        parse_expr("a < b < c")


def test_trace_precedence():
    assert parse_trace("a() | b(); c(){1,2}") == A.TAlt((
        A.TCall("a", ()), A.TSeq((A.TCall("b", ()), A.TRep(A.TCall("c", ()), 1, 2)))))


SAMPLE = """module M
  -- comment lines are ignored
  f(a: int, b: int): int == a / b
    pre b <> 0
    post RESULT * b <= a or a < 0
  g(n: nat): bool == n > 3
  trace t = let x in {1, 2} . f(4, x){0,2}
  lemma L : p and q => q
end
"""


def test_parse_module():
    m, diags = parse(SAMPLE)
    assert diags == []
    assert m.name == "M"
    assert [d.name for d in m.defs] == ["f", "g", "t", "L"]
    assert m.function("f").pre == parse_expr("b <> 0")
    assert typecheck(m) == []


def test_module_text_round_trip():
    m, _ = parse(SAMPLE)
    again, diags = parse(module_text(m))
    assert diags == [] and again == m


@pytest.mark.parametrize("text, fragment", [
    ("module M\n  f(a: int): int == a +\nend\n", "expected"),
    ("module M\n  f(a: int): int == 1\n", "end"),
    ("module M\n  f(a: int): int == 1 $ 2\nend\n", "unexpected character"),
    ("module M\n  trace t = f(){2,1}\nend\n", "repetition"),
])
def test_syntax_errors_are_diagnostics(text, fragment):
    m, diags = parse(text)
    assert m is None and len(diags) == 1
    assert fragment in diags[0].message.lower()


def test_diagnostic_position():
    _, diags = parse("module M\n  f(a: int): int == a + \nend\n")
    assert diags[0].span.start.line == 2


@pytest.mark.parametrize("body, fragment", [
    ("f(a: int): bool == a + 1", "expected bool"),
    ("f(a: int): int == b", "unknown variable"),
    ("f(a: int): int == h(a)", "unknown function"),
    ("f(a: int): int == if a then 1 else 2", "expected bool"),
    ("f(a: int): int == a\n  trace t = f(true)", "does not fit"),
    ("f(a: nat): int == a\n  trace t = f(-1)", "does not fit"),
    ("f(a: int): int == a\n  trace t = f(1, 2)", "expects 1 argument"),
    ("lemma L : 1 + 2", "must be boolean"),
    ("f(a: int): int == 1\n  f(b: int): int == 2", "duplicate"),
])
def test_type_errors(body, fragment):
    m, diags = parse(f"module M\n  {body}\nend\n")
    assert diags == []
    messages = [d.message for d in typecheck(m)]
    assert any(fragment in msg for msg in messages), messages


def test_nat_arithmetic_typing():
    m, _ = parse("module M\n  f(a: nat, b: nat): nat == a * b + a / b\n  g(a: nat): nat == a - 1\nend\n")
    assert typecheck(m) == []


def test_lemma_variables_default_to_bool():
    m, _ = parse("module M\n  lemma L : p => x + 1 > x\nend\n")
    assert lemma_variables(m, m.lemma("L").body) == {"p": A.BOOL, "x": A.INT}


# -- evaluation ------------------------------------------------------------------------------

@given(st.integers(-10**6, 10**6), st.integers(-10**6, 10**6).filter(bool))
def test_truncating_division(a, b):
    q, r = trunc_div(a, b), trunc_mod(a, b)
    assert q * b + r == a
    assert abs(r) < abs(b)
    assert r == 0 or (r > 0) == (a > 0)


def test_division_examples():
    assert evaluate(parse_expr("-7 / 2")) == -3
    assert evaluate(parse_expr("-7 mod 2")) == -1
    assert evaluate(parse_expr("7 mod -2")) == 1


@pytest.mark.parametrize("text, error", [
    ("1 / 0", DivisionByZero),
    ("1 mod 0", DivisionByZero),
    ("9223372036854775807 + 1", Overflow),
    ("-9223372036854775807 - 2", Overflow),
])
def test_runtime_errors(text, error):
    with pytest.raises(error):
        evaluate(parse_expr(text))


def test_short_circuit_avoids_errors():
    assert evaluate(parse_expr("false and 1 / 0 = 1")) is False
    assert evaluate(parse_expr("true or 1 / 0 = 1")) is True
    assert evaluate(parse_expr("false => 1 / 0 = 1")) is True


def _module(text):
    m, diags = parse(f"module M\n{text}\nend\n")
    assert diags == [] and typecheck(m) == []
    return m


def test_function_calls_and_contracts():
    m = _module("  f(a: int, b: int): int == a / b\n    pre b <> 0\n    post RESULT * b <= a\n"
                "  n(a: int): nat == a\n  rec(n: nat): nat == if n = 0 then 0 else rec(n - 1)")
    ev = Evaluator(m)
    assert ev.apply(m.function("f"), [7, 2]) == 3
    with pytest.raises(PreconditionViolation):
        ev.apply(m.function("f"), [1, 0])
    with pytest.raises(PostconditionViolation):
        ev.apply(m.function("f"), [-7, 2])
    with pytest.raises(SubtypeViolation):
        ev.apply(m.function("n"), [-1])
    with pytest.raises(SubtypeViolation):
        ev.apply(m.function("rec"), [-1])
    assert ev.apply(m.function("rec"), [150]) == 0
    with pytest.raises(StackOverflow):
        ev.apply(m.function("rec"), [500])


@given(st.integers(-100, 100), st.integers(-100, 100))
def test_let_and_if_agree_with_python(x, y):
    e = parse_expr("let s = x + y in if s > 0 then s * 2 else 0 - s")
    s = x + y
    assert evaluate(e, {"x": x, "y": y}) == (s * 2 if s > 0 else -s)
