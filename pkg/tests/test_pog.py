import itertools

import pytest

from slsp.minispec import Evaluator, parse, typecheck
from slsp.minispec import ast as A
from slsp.minispec.evaluator import DivisionByZero, EvalError, PreconditionViolation, SubtypeViolation
from slsp.pog import DIVISION_BY_ZERO, NAT_SUBTYPE, PRECONDITION, generate_pos, module_obligations
from slsp.workspace import analyze

from conftest import CORPUS
from oracles import division_sites


def _module(text: str) -> A.Module:
    m, diags = parse(text)
    assert diags == [] and typecheck(m) == []
    return m


def _sources(text: str) -> list:
    f = analyze("file:///w/T.ms", text)
    return [(p.kind, p.source, p.proved) for p in generate_pos([f])]


def test_division_with_precondition():
    assert _sources("module T\n  f(a: int, b: int): int == a / b\n    pre b <> 0\nend\n") == [
        (DIVISION_BY_ZERO, "b <> 0 => b <> 0", True)]


def test_division_without_guard_is_unproved():
    assert _sources("module T\n  f(a: int, b: int): int == a mod b\nend\n") == [
        (DIVISION_BY_ZERO, "b <> 0", None)]


def test_branch_and_short_circuit_contexts():
    pos = _sources("module T\n"
                   "  f(a: int, b: int): int == if b = 0 then 0 else a / b\n"
                   "  g(a: int, b: int): bool == b <> 0 and a / b > 1\n"
                   "  h(a: int, b: int): bool == b = 0 or a / b > 1\nend\n")
    assert [s for _, s, _ in pos] == [
        "not (b = 0) => b <> 0",
        "b <> 0 => b <> 0",
        "not (b = 0) => b <> 0",
    ]
    assert all(proved for *_, proved in pos)


def test_let_values_are_substituted():
    assert _sources("module T\n  f(a: int): int == let d = a - 1 in 10 / d\nend\n") == [
        (DIVISION_BY_ZERO, "a - 1 <> 0", None)]


def test_precondition_and_nat_obligations():
    pos = _sources("module T\n"
                   "  inv(n: int): int == 100 / n\n    pre n <> 0\n"
                   "  use(k: int): int == inv(k + 1)\n"
                   "  half(n: nat): nat == n / 2\n"
                   "  dec(n: nat): nat == n - 1\nend\n")
    assert pos == [
        (DIVISION_BY_ZERO, "n <> 0 => n <> 0", True),
        (PRECONDITION, "k + 1 <> 0", None),
        (DIVISION_BY_ZERO, "2 <> 0", True),
        (NAT_SUBTYPE, "n - 1 >= 0", None),
    ]


def test_postcondition_substitutes_result():
    pos = _sources("module T\n  f(a: int): int == a\n    post 10 / RESULT > 0\nend\n")
    assert pos == [(DIVISION_BY_ZERO, "a <> 0", None)]


def test_lemma_obligations():
    assert _sources("module T\n  lemma L : 7 / 2 = 3\nend\n") == [(DIVISION_BY_ZERO, "2 <> 0", True)]


def test_ids_and_names_in_document_order(corpus_workspace):
    pos = generate_pos(corpus_workspace.files_under())
    assert [p.id for p in pos] == list(range(1, len(pos) + 1))
    uris = [p.location.uri for p in pos]
    assert uris == sorted(uris)
    assert all(p.name.count(".") == 1 for p in pos)


@pytest.mark.parametrize("path", sorted(CORPUS.glob("*.ms")), ids=lambda p: p.stem)
def test_every_division_site_has_an_obligation(path):
    m = _module(path.read_text())
    obs = [o for o in module_obligations(m) if o.kind == DIVISION_BY_ZERO]
    assert len(obs) == division_sites(m)


SOUNDNESS = """module S
  f(a: int, b: int): int == if a > b then a / (a - b) else b mod (a + 2)
  g(a: int, b: int): int == let d = a * b - 1 in if d = 0 then 0 else (a + b) / d
  h(a: int, b: int): bool == a = 0 or b / a > 0
  k(a: int, b: int): nat == if a >= 0 then a else b
  inv(a: int, b: int): int == 12 / a
    pre a <> 0
  u(a: int, b: int): int == if b > 0 then inv(a - b, 0) else 0
end
"""

FAULTS = {DivisionByZero: DIVISION_BY_ZERO, SubtypeViolation: NAT_SUBTYPE,
          PreconditionViolation: PRECONDITION}


def _false_at(ev, expr, env) -> bool:
    try:
        return ev.eval(expr, env) is False
    except EvalError:
        return True


def test_runtime_faults_imply_a_failing_obligation():
    """Each fault raised at a function's own sites on a small grid is predicted by a false obligation."""
    m = _module(SOUNDNESS)
    ev = Evaluator(m)
    obs = module_obligations(m)
    for f in m.functions:
        mine = [o for o in obs if o.name == f"S.{f.name}"]
        for a, b in itertools.product(range(-3, 4), repeat=2):
            if not ev.pre_holds(f, [a, b]):
                continue
            try:
                ev.apply(f, [a, b], check_pre=False)
                continue
            except tuple(FAULTS) as err:
                kind = FAULTS[type(err)]
            assert any(o.kind == kind and _false_at(ev, o.expr, {"a": a, "b": b}) for o in mine), \
                f"{f.name}({a}, {b}) faulted with {kind} but no obligation fails"


def test_discharged_obligations_hold_on_grid():
    m = _module(SOUNDNESS)
    ev = Evaluator(m)
    f = analyze("file:///w/S.ms", SOUNDNESS)
    for po, ob in zip(generate_pos([f]), module_obligations(m)):
        if not po.proved:
            continue
        for a, b in itertools.product(range(-3, 4), repeat=2):
            assert ev.eval(ob.expr, {"a": a, "b": b}) is True
