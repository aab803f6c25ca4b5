"""Scripted sessions: send/expect steps with wildcard matching and transcripts.

A script is a JSON array of steps:

* ``{"send": {"method": ..., "params": ..., "id": "$id"}}`` sends a request
  (a notification when ``id`` is absent); ``"$id"`` gets a fresh id.
* ``{"expect": pattern}`` matches the next inbound message.  ``"$any"``
  matches any value and ``"$id"`` matches the id of the latest request.
* ``{"sleep": ms}`` pauses.

``"${rootUri}"`` inside any string is replaced by the workspace root uri.
"""

from __future__ import annotations

import json
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Union

from ..protocol import dumps
from ..workspace import path_to_uri
from .connection import (
    DEFAULT_TIMEOUT,
    ServerClosed,
    ServerConnection,
    TimeoutWaitingForMessage,
)

ANY = "$any"
ID = "$id"
ROOT_PLACEHOLDER = "${rootUri}"


class ScriptError(ValueError):
    """The script is not well-formed."""


@dataclass
class Check:
    name: str
    verdict: str  # "pass" | "fail" | "skip"
    expected: Any = None
    observed: Any = None
    detail: str = ""

    def to_json(self) -> dict:
        out: dict = {"name": self.name, "verdict": self.verdict}
        if self.verdict == "fail":
            out["expected"] = self.expected
            out["observed"] = self.observed
        if self.detail:
            out["detail"] = self.detail
        return out


@dataclass
class ConformanceReport:
    checks: list = field(default_factory=list)

    def add(self, name: str, ok: bool, expected: Any = None, observed: Any = None, detail: str = "") -> Check:
        check = Check(name, "pass" if ok else "fail", expected, observed, detail)
        self.checks.append(check)
        return check

    def skip(self, name: str, detail: str = "") -> None:
        self.checks.append(Check(name, "skip", detail=detail))

    def count(self, verdict: str) -> int:
        return sum(1 for c in self.checks if c.verdict == verdict)

    @property
    def passed(self) -> int:
        return self.count("pass")

    @property
    def failed(self) -> int:
        return self.count("fail")

    @property
    def skipped(self) -> int:
        return self.count("skip")

    def summary(self) -> dict:
        return {"total": len(self.checks), "pass": self.passed, "fail": self.failed, "skip": self.skipped}

    def to_json(self) -> dict:
        return {"checks": [c.to_json() for c in self.checks], "summary": self.summary()}

    def text(self) -> str:
        lines = []
        for c in self.checks:
            line = f"{c.verdict.upper():4} {c.name}"
            if c.detail:
                line += f"  ({c.detail})"
            lines.append(line)
            if c.verdict == "fail":
                lines.append(f"     expected: {dumps(c.expected)}")
                lines.append(f"     observed: {dumps(c.observed)}")
        s = self.summary()
        lines.append(f"{s['total']} checks: {s['pass']} passed, {s['fail']} failed, {s['skip']} skipped")
        return "\n".join(lines)


def load_script(source: Union[str, Path, list]) -> list:
    steps = source if isinstance(source, list) else json.loads(Path(source).read_text(encoding="utf-8"))
    if not isinstance(steps, list):
        raise ScriptError("a script is a JSON array of steps")
    for i, step in enumerate(steps):
        if not isinstance(step, dict) or len(step) != 1:
            raise ScriptError(f"step {i + 1}: expected one of send/expect/sleep")
        (kind, body), = step.items()
        if kind == "send":
            if not isinstance(body, dict) or not isinstance(body.get("method"), str):
                raise ScriptError(f"step {i + 1}: send needs a method")
        elif kind == "sleep":
            if isinstance(body, bool) or not isinstance(body, (int, float)) or body < 0:
                raise ScriptError(f"step {i + 1}: sleep takes milliseconds")
        elif kind != "expect":
            raise ScriptError(f"step {i + 1}: unknown step kind {kind!r}")
    return steps


def substitute(value: Any, root_uri: str) -> Any:
    if isinstance(value, str):
        return value.replace(ROOT_PLACEHOLDER, root_uri)
    if isinstance(value, list):
        return [substitute(v, root_uri) for v in value]
    if isinstance(value, dict):
        return {k: substitute(v, root_uri) for k, v in value.items()}
    return value


def matches(pattern: Any, value: Any, current_id: Any = None) -> bool:
    """Structural equality with the ``$any`` and ``$id`` wildcards; object key sets must agree."""
    if pattern == ANY:
        return True
    if pattern == ID:
        return current_id is not None and value == current_id
    if isinstance(pattern, dict):
        return (isinstance(value, dict) and pattern.keys() == value.keys()
                and all(matches(p, value[k], current_id) for k, p in pattern.items()))
    if isinstance(pattern, list):
        return (isinstance(value, list) and len(pattern) == len(value)
                and all(matches(p, v, current_id) for p, v in zip(pattern, value)))
    if isinstance(pattern, bool) or isinstance(value, bool):
        return pattern is value
    return pattern == value


def _describe(pattern: Any) -> str:
    if isinstance(pattern, dict):
        if "method" in pattern:
            return str(pattern["method"])
        if "error" in pattern:
            return "error response"
        if "result" in pattern:
            return "response"
    return "message"


def _rewrite(value: Any, root_uri: str, root_path: str) -> Any:
    if isinstance(value, str):
        return value.replace(root_uri, ROOT_PLACEHOLDER).replace(root_path, ROOT_PLACEHOLDER)
    if isinstance(value, list):
        return [_rewrite(v, root_uri, root_path) for v in value]
    if isinstance(value, dict):
        return {k: _rewrite(v, root_uri, root_path) for k, v in value.items()}
    return value


def normalize_transcript(frames: list, root_uri: str = "", root_path: str = "") -> str:
    """Render frames as ``--> json`` / ``<-- json`` lines with ids renumbered by first appearance.

    Request ids and the ids carried by ``$/cancelRequest`` are renumbered; the
    workspace root is replaced by ``${rootUri}``.
    """
    id_map: dict = {}

    def norm(i):
        if i is None:
            return None
        return id_map.setdefault(i, len(id_map) + 1)

    lines = []
    for direction, obj in frames:
        obj = dict(obj)
        if "id" in obj:
            obj["id"] = norm(obj["id"])
        if obj.get("method") == "$/cancelRequest" and isinstance(obj.get("params"), dict):
            obj["params"] = {**obj["params"], "id": norm(obj["params"].get("id"))}
        if root_uri:
            obj = _rewrite(obj, root_uri, root_path or root_uri)
        lines.append(f"{direction} {dumps(obj)}")
    return "\n".join(lines) + "\n"


@dataclass
class ScriptResult:
    report: ConformanceReport
    transcript: str
    exit_code: Optional[int]


def run_script(server_cmd, script, root: Optional[Union[str, Path]] = None,
               timeout: float = DEFAULT_TIMEOUT) -> ScriptResult:
    """Execute ``script`` against a freshly spawned server.

    Without ``root`` the session runs in an empty temporary directory.
    """
    steps = load_script(script)
    if root is None:
        with tempfile.TemporaryDirectory(prefix="slsp-session-") as tmp:
            return _run(server_cmd, steps, Path(tmp), timeout)
    return _run(server_cmd, steps, Path(root), timeout)


def _run(server_cmd, steps: list, root: Path, timeout: float) -> ScriptResult:
    root = root.resolve()
    root_uri = path_to_uri(root)
    report = ConformanceReport()
    conn = ServerConnection(server_cmd, cwd=str(root))
    try:
        try:
            conn.initialize(root_uri, timeout, process_id=None)
            report.add("initialize", True)
        except Exception as exc:  # noqa: BLE001 - reported, never raised
            report.add("initialize", False, "InitializeResult", str(exc))
            return ScriptResult(report, normalize_transcript(conn.transcript, root_uri, str(root)),
                                conn.close(1.0))
        current_id = None
        for n, step in enumerate(steps, 1):
            (kind, body), = step.items()
            body = substitute(body, root_uri)
            if kind == "sleep":
                time.sleep(body / 1000)
            elif kind == "send":
                if "id" in body:
                    current_id = conn.send_request(body["method"], body.get("params"))
                else:
                    conn.send_notification(body["method"], body.get("params"))
            else:
                name = f"step {n}: expect {_describe(body)}"
                try:
                    msg = conn.next_message(timeout)
                except (TimeoutWaitingForMessage, ServerClosed) as exc:
                    report.add(name, False, body, None, str(exc))
                    break
                observed = msg.to_json()
                report.add(name, matches(body, observed, current_id), body, observed)
        code = conn.shutdown(timeout)
    finally:
        if conn.proc.poll() is None:
            conn.close(1.0)
    return ScriptResult(report, normalize_transcript(conn.transcript, root_uri, str(root)), code)

