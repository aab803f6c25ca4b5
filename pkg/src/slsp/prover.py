"""Interactive and automatic proving of MiniSpec lemmas.

Lemma variables are implicitly universally quantified.  A proof is a list
of sequents (subgoals); commands always act on the first one.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass
from typing import Optional

from . import schema as S
from .cancellation import NEVER, CancellationToken
from .minispec import ast as A
from .minispec.checker import lemma_variables
from .minispec.evaluator import EvalError, Evaluator, format_value
from .minispec.printer import expr_text
from .protocol import INVALID_PARAMS, INVALID_REQUEST, RpcError
from .simplifier import simplify

MAX_AUTO_VARS = 16

COMMANDS = (
    S.TPCommand("intro", "Move the antecedent of an implication goal into the hypotheses."),
    S.TPCommand("split", "Split a conjunction goal into two subgoals, left conjunct first."),
    S.TPCommand("cases", "cases <var>: split on a boolean variable being true or false."),
    S.TPCommand("simplify", "Rewrite hypotheses and goal to normal form; closes the goal if it becomes true."),
    S.TPCommand("assumption", "Close the goal if it equals one of the hypotheses after simplification."),
    S.TPCommand("auto", "Decide the goal by exhaustive evaluation over its boolean variables."),
)
COMMAND_NAMES = tuple(c.name for c in COMMANDS)


@dataclass(frozen=True)
class Sequent:
    hyps: tuple
    goal: A.Expr

    def text(self) -> str:
        goal = expr_text(self.goal)
        if not self.hyps:
            return f"|- {goal}"
        return f"{', '.join(expr_text(h) for h in self.hyps)} |- {goal}"

    def formula(self) -> A.Expr:
        return A.implies(list(self.hyps), self.goal)


@dataclass(frozen=True)
class Decision:
    verdict: str  # "valid" | "invalid" | "unknown"
    description: str = ""


class CommandFailed(RpcError):
    def __init__(self, message: str):
        super().__init__(INVALID_PARAMS, message)


def decide(seq: Sequent, var_types: dict, module: A.Module,
           cancel: CancellationToken = NEVER) -> Decision:
    """Decide validity of ``hyps => goal`` by evaluation when it is finite."""
    formula = simplify(seq.formula())
    if formula == A.TRUE:
        return Decision("valid")
    names = A.free_vars(formula)
    unbounded = [v for v in names if var_types.get(v, A.BOOL) != A.BOOL]
    if unbounded:
        return Decision("unknown", f"variables {', '.join(unbounded)} range over integers")
    if len(names) > MAX_AUTO_VARS:
        return Decision("unknown", f"{len(names)} boolean variables exceed the limit of {MAX_AUTO_VARS}")
    ev = Evaluator(module)
    for values in itertools.product((False, True), repeat=len(names)):
        cancel.check()
        env = dict(zip(names, values))
        valuation = ",".join(f"{n}={format_value(v)}" for n, v in env.items())
        try:
            holds = ev.eval(formula, env)
        except EvalError as err:
            return Decision("invalid", f"evaluation fails with {err.name} at {valuation or 'no variables'}")
        if not holds:
            if valuation:
                return Decision("invalid", f"counterexample: {valuation}")
            return Decision("invalid", "the goal evaluates to false")
    return Decision("valid")


class ProofSession:
    def __init__(self, module: A.Module, lemma: A.LemmaDef, version: int):
        self.module = module
        self.lemma = lemma
        self.started_at_version = version
        self.var_types = lemma_variables(module, lemma.body)
        first = () if lemma.body == A.TRUE else (Sequent((), lemma.body),)
        # history[k] = (command that produced state k, subgoals at state k)
        self.history: list = [(None, first)]

    @property
    def step(self) -> int:
        return len(self.history) - 1

    @property
    def subgoals(self) -> tuple:
        return self.history[-1][1]

    @property
    def proved(self) -> bool:
        return not self.subgoals

    @property
    def rules(self) -> list:
        return [cmd for cmd, _ in self.history[1:]]

    def state(self) -> S.ProofState:
        return S.ProofState(
            id=self.step,
            status="proved" if self.proved else "open",
            subgoals=[g.text() for g in self.subgoals],
            rules=self.rules,
        )

    def bool_vars(self) -> list:
        return [v for v in A.free_vars(self.lemma.body) if self.var_types.get(v) == A.BOOL]

    def apply(self, command: str, cancel: CancellationToken = NEVER) -> str:
        """Run one command; returns its description.  Raises without changing state."""
        parts = command.split()
        if not parts:
            raise CommandFailed("empty command")
        name, args = parts[0], parts[1:]
        if name not in COMMAND_NAMES:
            raise CommandFailed(f"unknown command '{name}'; available: {', '.join(COMMAND_NAMES)}")
        if name == "cases":
            if len(args) != 1:
                raise CommandFailed("usage: cases <variable>")
        elif args:
            raise CommandFailed(f"'{name}' takes no argument")
        if self.proved:
            raise RpcError(INVALID_REQUEST, "the proof is already complete")
        first, rest = self.subgoals[0], self.subgoals[1:]
        new, description = getattr(self, f"_cmd_{name}")(first, *args, cancel=cancel)
        self.history.append((" ".join(parts), tuple(new) + rest))
        if self.proved:
            description += "; proof complete"
        return description

    def _cmd_intro(self, seq: Sequent, cancel) -> tuple:
        g = seq.goal
        if not (isinstance(g, A.Binary) and g.op == "=>"):
            raise CommandFailed(f"intro needs an implication goal, found '{expr_text(g)}'")
        return [Sequent(seq.hyps + (g.left,), g.right)], f"introduced hypothesis '{expr_text(g.left)}'"

    def _cmd_split(self, seq: Sequent, cancel) -> tuple:
        g = seq.goal
        if not (isinstance(g, A.Binary) and g.op == "and"):
            raise CommandFailed(f"split needs a conjunction goal, found '{expr_text(g)}'")
        return [Sequent(seq.hyps, g.left), Sequent(seq.hyps, g.right)], "split into two subgoals"

    def _cmd_cases(self, seq: Sequent, var: str, cancel) -> tuple:
        if self.var_types.get(var) != A.BOOL:
            raise CommandFailed(f"'{var}' is not a boolean variable of lemma {self.lemma.name}")
        out = []
        for lit in (A.TRUE, A.FALSE):
            m = {var: lit}
            out.append(Sequent(tuple(A.substitute(h, m) for h in seq.hyps), A.substitute(seq.goal, m)))
        return out, f"case split on '{var}'"

    def _cmd_simplify(self, seq: Sequent, cancel) -> tuple:
        hyps = tuple(simplify(h) for h in seq.hyps)
        goal = simplify(seq.goal)
        if goal == A.TRUE:
            return [], "goal simplified to true; subgoal closed"
        new = Sequent(hyps, goal)
        if new == seq:
            raise CommandFailed("simplify made no progress")
        return [new], f"simplified to '{new.text()}'"

    def _cmd_assumption(self, seq: Sequent, cancel) -> tuple:
        goal = simplify(seq.goal)
        if any(simplify(h) == goal for h in seq.hyps):
            return [], "goal matches a hypothesis; subgoal closed"
        raise CommandFailed(f"no hypothesis matches '{expr_text(seq.goal)}'")

    def _cmd_auto(self, seq: Sequent, cancel) -> tuple:
        d = decide(seq, self.var_types, self.module, cancel)
        if d.verdict == "valid":
            return [], "decided valid; subgoal closed"
        if d.verdict == "invalid":
            raise CommandFailed(f"auto failed: {d.description}")
        raise CommandFailed(f"auto cannot decide the goal: {d.description}")

    def undo(self, step: Optional[int] = None) -> None:
        if step is None:
            if self.step == 0:
                raise RpcError(INVALID_REQUEST, "nothing to undo at step 0")
            step = self.step
        if not 1 <= step <= self.step:
            raise RpcError(INVALID_PARAMS, f"step id {step} is out of range 1..{self.step}")
        del self.history[step:]


class ProofEngine:
    """Per-workspace lemma statuses and proof sessions."""

    def __init__(self) -> None:
        self.sessions: dict = {}
        self.proved: set = set()
        self.active: Optional[str] = None

    def invalidate(self) -> None:
        self.sessions.clear()
        self.proved.clear()
        self.active = None

    def lemmas(self, files: list) -> list:
        out = []
        for f in files:
            if f.module is None:
                continue
            for lemma in f.module.lemmas:
                key = f"{f.module.name}.{lemma.name}"
                out.append(S.Lemma(
                    name=lemma.name,
                    theory=f.module.name,
                    location=S.Location(f.uri, S.Range.from_span(lemma.span)),
                    kind="lemma",
                    status="proved" if key in self.proved else "unproved",
                ))
        return out

    def resolve(self, files: list, name: str) -> tuple:
        """Find a lemma by ``Module.Lemma`` or unique bare name."""
        matches = []
        for f in files:
            m = f.module
            if m is None:
                continue
            for lemma in m.lemmas:
                if name in (lemma.name, f"{m.name}.{lemma.name}"):
                    matches.append((f, m, lemma))
        if not matches:
            raise RpcError(INVALID_PARAMS, f"unknown lemma '{name}'")
        if len(matches) > 1:
            raise RpcError(INVALID_PARAMS, f"lemma name '{name}' is ambiguous; qualify it with the module")
        f, m, lemma = matches[0]
        if not f.ok:
            raise RpcError(INVALID_REQUEST, f"{f.uri} has errors; fix them before proving")
        return m, lemma

    def _record(self, key: str, session: ProofSession) -> None:
        if session.proved:
            self.proved.add(key)
        else:
            self.proved.discard(key)

    def begin_proof(self, files: list, name: str, version: int) -> S.ProofState:
        module, lemma = self.resolve(files, name)
        key = f"{module.name}.{lemma.name}"
        session = ProofSession(module, lemma, version)
        self.sessions[key] = session
        self.active = key
        self._record(key, session)
        return session.state()

    def current(self) -> tuple:
        if self.active is None or self.active not in self.sessions:
            raise RpcError(INVALID_REQUEST, "no proof session is open; send slsp/TP/beginProof first")
        return self.active, self.sessions[self.active]

    def command(self, command: str, cancel: CancellationToken = NEVER) -> S.TPCommandResponse:
        key, session = self.current()
        description = session.apply(command, cancel)
        self._record(key, session)
        return S.TPCommandResponse(description, session.state())

    def undo(self, step: Optional[int] = None) -> S.ProofState:
        key, session = self.current()
        session.undo(step)
        self._record(key, session)
        return session.state()

    def prove(self, files: list, name: Optional[str], version: int,
              cancel: CancellationToken = NEVER) -> S.TPProveResponse:
        started = time.monotonic()
        if name is not None:
            self.begin_proof(files, name, version)
        key, session = self.current()
        failure: Optional[Decision] = None
        for seq in session.subgoals:
            d = decide(seq, session.var_types, session.module, cancel)
            if d.verdict != "valid":
                failure = d
                break
        response = S.TPProveResponse(status="unproved", processingTime=0)
        if failure is None:
            # Each subgoal is already decided; record one "auto" step per subgoal.
            while not session.proved:
                session.history.append(("auto", session.subgoals[1:]))
            self._record(key, session)
            response.status = "proved"
        elif failure.verdict == "invalid":
            response.description = failure.description
        else:
            response.description = failure.description
            suggestions = ["simplify", "intro"]
            bools = session.bool_vars()
            if bools:
                suggestions.append(f"cases {bools[0]}")
            response.suggestedCommands = suggestions
        response.processingTime = int((time.monotonic() - started) * 1000)
        return response


def get_commands() -> list:
    return list(COMMANDS)
