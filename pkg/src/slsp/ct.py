"""Combinatorial testing: trace expansion and test execution.

Expansion order: sequencing varies its right operand fastest, alternation
lists the left alternative's tests first, repetition counts upward from the
lower bound, and a binding iterates its values in source order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from . import schema as S
from .cancellation import NEVER, CancellationToken
from .minispec import ast as A
from .minispec.evaluator import EvalError, Evaluator, format_value
from .minispec.printer import call_text
from .protocol import INTERNAL_ERROR, INVALID_PARAMS, RpcError

EXPANSION_LIMIT = 100_000
MAX_SEQUENCE_LENGTH = 10_000
DEFAULT_BATCH_SIZE = 50

MASK64 = (1 << 64) - 1


class ExpansionLimitExceeded(Exception):
    def __init__(self, count: int, limit: int = EXPANSION_LIMIT, message: str = ""):
        super().__init__(message or f"trace expands to more than the limit of {limit} tests")
        self.count = count


def count_tests(t: A.TraceExpr, cap: int = EXPANSION_LIMIT) -> int:
    """Number of tests ``expand`` yields, saturating just above ``cap``."""
    if isinstance(t, A.TCall):
        return 1
    if isinstance(t, A.TSeq):
        n = 1
        for item in t.items:
            n = min(n * count_tests(item, cap), cap + 1)
        return n
    if isinstance(t, A.TAlt):
        return min(sum(count_tests(i, cap) for i in t.items), cap + 1)
    if isinstance(t, A.TRep):
        c = count_tests(t.body, cap)
        total = 0
        for k in range(t.lo, t.hi + 1):
            total = min(total + _sat_pow(c, k, cap), cap + 1)
            if total > cap:
                break
        return total
    if isinstance(t, A.TLet):
        return min(len(t.values) * count_tests(t.body, cap), cap + 1)
    raise TypeError(f"not a trace: {t!r}")


def _sat_pow(base: int, exp: int, cap: int) -> int:
    if base <= 1:
        return base ** exp if exp else 1
    if exp > 64:
        return cap + 1
    return min(base ** exp, cap + 1)


def max_length(t: A.TraceExpr) -> int:
    """Length of the longest call sequence ``t`` expands to."""
    if isinstance(t, A.TCall):
        return 1
    if isinstance(t, A.TSeq):
        return sum(max_length(i) for i in t.items)
    if isinstance(t, A.TAlt):
        return max(max_length(i) for i in t.items)
    if isinstance(t, A.TRep):
        return max_length(t.body) * t.hi
    if isinstance(t, A.TLet):
        return max_length(t.body)
    raise TypeError(f"not a trace: {t!r}")


def _arg_value(a, env: dict):
    if isinstance(a, A.Var):
        return env[a.name]
    return a.value


def _expand(t: A.TraceExpr, env: dict) -> list:
    if isinstance(t, A.TCall):
        return [((t.func, tuple(_arg_value(a, env) for a in t.args)),)]
    if isinstance(t, A.TSeq):
        out = [()]
        for item in t.items:
            tails = _expand(item, env)
            out = [head + tail for head in out for tail in tails]
        return out
    if isinstance(t, A.TAlt):
        return [s for item in t.items for s in _expand(item, env)]
    if isinstance(t, A.TRep):
        body = _expand(t.body, env)
        out = []
        for k in range(t.lo, t.hi + 1):
            seqs = [()]
            for _ in range(k):
                seqs = [head + tail for head in seqs for tail in body]
            out.extend(seqs)
        return out
    if isinstance(t, A.TLet):
        return [s for v in t.values for s in _expand(t.body, {**env, t.name: v.value})]
    raise TypeError(f"not a trace: {t!r}")


def expand(t: A.TraceExpr, limit: int = EXPANSION_LIMIT) -> list:
    """Ordered call sequences; each call is ``(function name, argument values)``."""
    n = count_tests(t, limit)
    if n > limit:
        raise ExpansionLimitExceeded(n, limit)
    longest = max_length(t)
    if longest > MAX_SEQUENCE_LENGTH:
        raise ExpansionLimitExceeded(
            n, limit, f"trace has tests of {longest} calls, more than the limit of {MAX_SEQUENCE_LENGTH}")
    return _expand(t, {})


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)


def select_random(ids: list, limit: int, seed: int) -> list:
    """Partial Fisher-Yates over ``ids`` taking ``limit`` elements, sorted."""
    ids = list(ids)
    rng = SplitMix64(seed)
    n = len(ids)
    for i in range(min(limit, n)):
        j = i + rng.next() % (n - i)
        ids[i], ids[j] = ids[j], ids[i]
    return sorted(ids[:limit])


@dataclass
class ExpandedTrace:
    trace_name: str
    tests: list
    generated_at_version: int


@dataclass(frozen=True)
class Filter:
    limit: Optional[int] = None
    seed: int = 0


def parse_filter(options: Optional[list]) -> Filter:
    limit, seed = None, 0
    for opt in options or []:
        if opt.key == "random.limit":
            if isinstance(opt.value, bool) or not isinstance(opt.value, int) or opt.value < 1:
                raise RpcError(INVALID_PARAMS, "'random.limit' must be an integer >= 1")
            limit = opt.value
        elif opt.key == "random.seed":
            if isinstance(opt.value, bool) or not isinstance(opt.value, int):
                raise RpcError(INVALID_PARAMS, "'random.seed' must be an integer")
            seed = opt.value
        else:
            raise RpcError(INVALID_PARAMS, f"unknown filter option '{opt.key}'")
    return Filter(limit, seed)


def run_test(module: A.Module, test_id: int, calls: tuple) -> S.CTTestCase:
    ev = Evaluator(module)
    sequence = [S.CTCallResult(call_text(name, args), None) for name, args in calls]
    verdict = S.Verdict.PASSED
    for step, (name, args) in enumerate(calls):
        f = module.function(name)
        try:
            if not ev.pre_holds(f, list(args)):
                sequence[step].result = "PreconditionViolation"
                verdict = S.Verdict.INCONCLUSIVE
                break
            sequence[step].result = format_value(ev.apply(f, list(args), check_pre=False))
        except EvalError as err:
            sequence[step].result = err.name
            verdict = S.Verdict.FAILED
            break
    return S.CTTestCase(id=test_id, sequence=sequence, verdict=verdict)


def aggregate(verdicts: list) -> Optional[S.Verdict]:
    vs = [v for v in verdicts if v != S.Verdict.FILTERED]
    if S.Verdict.FAILED in vs:
        return S.Verdict.FAILED
    if S.Verdict.INCONCLUSIVE in vs:
        return S.Verdict.INCONCLUSIVE
    if S.Verdict.PASSED in vs:
        return S.Verdict.PASSED
    return None


class CTEngine:
    def __init__(self, batch_size: int = DEFAULT_BATCH_SIZE):
        self.batch_size = batch_size
        self.cache: dict = {}
        self.verdicts: dict = {}

    def traces(self, files: list) -> list:
        out = []
        for f in files:
            m = f.module
            if m is None or not m.traces:
                continue
            out.append(S.CTSymbol(m.name, [
                S.CTTrace(
                    name=f"{m.name}.{t.name}",
                    location=S.Location(f.uri, S.Range.from_span(t.span)),
                    verdict=self.verdicts.get(f"{m.name}.{t.name}"),
                )
                for t in m.traces
            ]))
        return out

    def resolve(self, files: list, name: str) -> tuple:
        group, _, trace = name.rpartition(".")
        for f in files:
            m = f.module
            if m is not None and m.name == group and m.trace(trace) is not None:
                if not f.ok:
                    raise RpcError(INTERNAL_ERROR, f"{f.uri} has errors; fix them before testing")
                return m, m.trace(trace)
        raise RpcError(INVALID_PARAMS, f"unknown trace '{name}'")

    def generate(self, files: list, name: str, version: int) -> ExpandedTrace:
        cached = self.cache.get(name)
        if cached is not None and cached.generated_at_version == version:
            return cached
        _, trace = self.resolve(files, name)
        try:
            tests = expand(trace.body)
        except ExpansionLimitExceeded as exc:
            raise RpcError(INTERNAL_ERROR, str(exc)) from None
        expanded = ExpandedTrace(name, tests, version)
        self.cache[name] = expanded
        return expanded

    def execute(
        self,
        files: list,
        params: S.CTExecuteParams,
        version: int,
        progress: Optional[Callable[[list], None]] = None,
        cancel: CancellationToken = NEVER,
    ) -> list:
        """Run tests in range; with ``progress`` the cases are streamed in batches and ``[]`` returned."""
        module, _ = self.resolve(files, params.name)
        flt = parse_filter(params.filter)
        expanded = self.generate(files, params.name, version)
        total = len(expanded.tests)
        start = params.range.start if params.range and params.range.start else 1
        end = params.range.end if params.range and params.range.end else total
        if start > total:
            raise RpcError(INVALID_PARAMS, f"range start {start} exceeds the {total} generated tests")
        end = min(end, total)
        ids = list(range(start, end + 1))
        selected = set(ids) if flt.limit is None else set(select_random(ids, flt.limit, flt.seed))

        results: list = []
        batch: list = []
        for test_id in ids:
            cancel.check()
            calls = expanded.tests[test_id - 1]
            if test_id in selected:
                case = run_test(module, test_id, calls)
            else:
                case = S.CTTestCase(
                    id=test_id,
                    sequence=[S.CTCallResult(call_text(n, a), None) for n, a in calls],
                    verdict=S.Verdict.FILTERED,
                )
            results.append(case)
            if progress is not None:
                batch.append(case)
                if len(batch) >= self.batch_size:
                    progress(batch)
                    batch = []
        if progress is not None and batch:
            progress(batch)
        verdict = aggregate([c.verdict for c in results])
        if verdict is not None:
            self.verdicts[params.name] = verdict
        return [] if progress is not None else results
