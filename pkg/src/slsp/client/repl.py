"""Interactive proof REPL on top of the TP methods."""

from __future__ import annotations

import sys
from typing import Callable, Optional, TextIO

from .. import schema as S
from ..protocol import RpcError
from .connection import ServerClosed, ServerConnection, TimeoutWaitingForMessage

HELP = """commands: intro | split | cases <var> | simplify | assumption | auto
  :undo [id]   go back one step, or to step id
  :auto        ask the server to prove the lemma automatically
  :help        show this text
  :quit        leave"""


def format_state(state: S.ProofState) -> str:
    lines = [f"[{state.id}] {state.status}"]
    for i, goal in enumerate(state.subgoals, 1):
        lines.append(f"  {i}. {goal}")
    return "\n".join(lines)


def interactive_prove(conn: ServerConnection, lemma: str, stdin: TextIO = sys.stdin,
                      stdout: TextIO = sys.stdout, prompt: str = "proof> ") -> int:
    """Drive a proof of ``lemma`` from lines on ``stdin``; returns 0 if it ends proved."""
    out: Callable[[str], None] = lambda text: print(text, file=stdout, flush=True)  # noqa: E731

    def call(method: str, params: dict) -> Optional[object]:
        try:
            return conn.request(method, params)
        except RpcError as err:
            out(f"error {err.code}: {err.message}")
        except (ServerClosed, TimeoutWaitingForMessage) as exc:
            out(f"error: {exc}")
        return None

    res = call("slsp/TP/beginProof", {"name": lemma})
    if res is None:
        return 1
    state = S.ProofState.from_json(res)
    out(format_state(state))
    while True:
        if stdin.isatty():
            stdout.write(prompt)
            stdout.flush()
        line = stdin.readline()
        if not line:
            break
        line = line.strip()
        if not line:
            continue
        if line in (":quit", ":q"):
            break
        if line == ":help":
            out(HELP)
            continue
        if line.startswith(":undo"):
            arg = line[len(":undo"):].strip()
            if arg and not arg.isdigit():
                out("usage: :undo [id]")
                continue
            res = call("slsp/TP/undo", {"id": int(arg)} if arg else {})
            if res is not None:
                state = S.ProofState.from_json(res)
                out(format_state(state))
            continue
        if line == ":auto":
            res = call("slsp/TP/prove", {"name": lemma})
            if res is not None:
                prove = S.TPProveResponse.from_json(res)
                out(f"{prove.status} ({prove.processingTime} ms)")
                if prove.description:
                    out(prove.description)
                if prove.suggestedCommands:
                    out("try: " + ", ".join(prove.suggestedCommands))
                if prove.status == "proved":
                    state = S.ProofState(state.id, "proved", [], state.rules)
            continue
        if line.startswith(":"):
            out(f"unknown directive {line.split()[0]}; :help lists them")
            continue
        res = call("slsp/TP/command", {"command": line})
        if res is not None:
            cmd = S.TPCommandResponse.from_json(res)
            state = cmd.state
            out(cmd.description)
            out(format_state(state))
    return 0 if state.status == "proved" else 1
