"""Conformance suite: every announced SLSP method against the bundled fixture project."""

from __future__ import annotations

import shutil
import tempfile
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Optional

from .. import schema as S
from ..protocol import INVALID_PARAMS, REQUEST_CANCELLED, RpcError, RpcMessage
from ..workspace import path_to_uri, uri_to_path
from .connection import DEFAULT_TIMEOUT, ServerClosed, ServerConnection, TimeoutWaitingForMessage
from .script import ConformanceReport

FEATURE_METHODS = {
    "POG": ("slsp/POG/generate", "slsp/POG/updated"),
    "CT": ("slsp/CT/traces", "slsp/CT/generate", "slsp/CT/execute"),
    "TR": ("slsp/TR/translate",),
    "TP": ("slsp/TP/lemmas", "slsp/TP/beginProof", "slsp/TP/prove",
           "slsp/TP/getCommands", "slsp/TP/command", "slsp/TP/undo"),
}

# One request per feature used to check that unannounced features are refused.
GATING_PROBES = {
    "POG": ("slsp/POG/generate", lambda root: {"uri": root}),
    "CT": ("slsp/CT/traces", lambda root: {}),
    "TR": ("slsp/TR/translate", lambda root: {"languageId": "markdown", "saveUri": root}),
    "TP": ("slsp/TP/lemmas", lambda root: {}),
}

BROKEN_EDIT = "module Bank\n  oops(: int == 1\nend\n"


def fixture_dir() -> Path:
    return Path(str(resources.files("slsp.client") / "fixture"))


class _Failed(Exception):
    def __init__(self, expected: Any, observed: Any, detail: str = ""):
        super().__init__(detail)
        self.expected, self.observed, self.detail = expected, observed, detail


def _require(ok: bool, expected: Any, observed: Any, detail: str = "") -> None:
    if not ok:
        raise _Failed(expected, observed, detail)


class Suite:
    def __init__(self, conn: ServerConnection, root: Path, timeout: float):
        self.conn = conn
        self.root = root
        self.root_uri = path_to_uri(root)
        self.timeout = timeout
        self.report = ConformanceReport()
        self.notifications: list = []

    # -- plumbing ------------------------------------------------------------------

    def check(self, name: str, body: Callable[[], Optional[str]]) -> None:
        try:
            detail = body() or ""
            self.report.add(name, True, detail=detail)
        except _Failed as exc:
            self.report.add(name, False, exc.expected, exc.observed, exc.detail)
        except RpcError as err:
            self.report.add(name, False, "result", {"error": err.to_json()})
        except (TimeoutWaitingForMessage, ServerClosed) as exc:
            self.report.add(name, False, "response", None, str(exc))

    def call(self, method: str, params: Any = None) -> RpcMessage:
        rid = self.conn.send_request(method, params)
        return self.conn.wait_response(rid, self.timeout, self.notifications.append)

    def result(self, method: str, params: Any = None) -> Any:
        resp = self.call(method, params)
        if resp.error is not None:
            raise resp.error
        return resp.result

    def expect_error(self, method: str, params: Any, code: Optional[int]) -> str:
        resp = self.call(method, params)
        want = {"error": {"code": code if code is not None else "any"}}
        _require(resp.error is not None, want, {"result": resp.result})
        _require(code is None or resp.error.code == code, want, {"error": resp.error.to_json()})
        return f"error {resp.error.code}"

    def await_notification(self, method: str) -> RpcMessage:
        for i, msg in enumerate(self.notifications):
            if msg.is_notification and msg.method == method:
                return self.notifications.pop(i)
        while True:
            msg = self.conn.next_message(self.timeout)
            if msg.is_notification and msg.method == method:
                return msg
            self.notifications.append(msg)

    def invalid_params(self, method: str, params: Any) -> None:
        self.check(f"{method}: invalid params", lambda: self.expect_error(method, params, INVALID_PARAMS))

    # -- features ---------------------------------------------------------------------

    def run_pog(self) -> None:
        bank = self.root / "Bank.ms"
        uri = path_to_uri(bank)
        text = bank.read_text(encoding="utf-8")

        def updated_after(send: Callable[[], None], want: bool) -> Callable[[], str]:
            def body() -> str:
                self.notifications.clear()
                send()
                msg = self.await_notification("slsp/POG/updated")
                params = S.validate_params("slsp/POG/updated", msg.params)
                _require(params.successful is want, {"successful": want}, msg.params)
                return f"successful={str(want).lower()}"
            return body

        self.check("slsp/POG/updated: after didOpen", updated_after(lambda: self.conn.send_notification(
            "textDocument/didOpen",
            {"textDocument": {"uri": uri, "languageId": "minispec", "version": 1, "text": text}}), True))
        self.check("slsp/POG/updated: after breaking edit", updated_after(lambda: self.conn.send_notification(
            "textDocument/didChange",
            {"textDocument": {"uri": uri, "version": 2}, "contentChanges": [{"text": BROKEN_EDIT}]}), False))
        self.check("slsp/POG/updated: after repairing edit", updated_after(lambda: self.conn.send_notification(
            "textDocument/didChange",
            {"textDocument": {"uri": uri, "version": 3}, "contentChanges": [{"text": text}]}), True))

        def generate() -> str:
            pos = self.result("slsp/POG/generate", {"uri": self.root_uri})
            _require(isinstance(pos, list) and pos, "non-empty ProofObligation[]", pos)
            parsed = [S.ProofObligation.from_json(po) for po in pos]
            ids = [po.id for po in parsed]
            _require(ids == list(range(1, len(ids) + 1)), "ids 1..n", ids)
            return f"{len(parsed)} obligations"

        self.check("slsp/POG/generate: valid", generate)
        self.invalid_params("slsp/POG/generate", {})
        self.check("slsp/POG/updated: after didClose", updated_after(lambda: self.conn.send_notification(
            "textDocument/didClose", {"textDocument": {"uri": uri}}), True))

    def run_ct(self) -> None:
        found: dict = {}

        def traces() -> str:
            symbols = [S.CTSymbol.from_json(s) for s in self.result("slsp/CT/traces", {})]
            for sym in symbols:
                for t in sym.traces:
                    found[t.name] = 0
            _require(len(found) > 0, "at least one trace", [s.to_json() for s in symbols])
            return f"{len(found)} traces"

        self.check("slsp/CT/traces: valid", traces)
        self.invalid_params("slsp/CT/traces", {"uri": 42})

        def generate() -> str:
            for name in found:
                n = self.result("slsp/CT/generate", {"name": name})
                _require(isinstance(n, dict) and isinstance(n.get("numberOfTests"), int)
                         and n["numberOfTests"] > 0, {"numberOfTests": "positive integer"}, n)
                found[name] = n["numberOfTests"]
            return ", ".join(f"{k}={v}" for k, v in found.items())

        self.check("slsp/CT/generate: valid", generate)
        self.invalid_params("slsp/CT/generate", {})
        if not found or not all(found.values()):
            return
        small = min(found, key=lambda k: (found[k], k))
        big = max(found, key=lambda k: (found[k], k))

        def execute() -> str:
            cases = [S.CTTestCase.from_json(c) for c in self.result("slsp/CT/execute", {"name": small})]
            _require([c.id for c in cases] == list(range(1, found[small] + 1)),
                     f"ids 1..{found[small]}", [c.id for c in cases])
            _require(all(c.verdict is not None for c in cases), "a verdict per case", None)
            return f"{small}: {len(cases)} cases"

        self.check("slsp/CT/execute: valid", execute)

        def streaming() -> str:
            self.notifications.clear()
            resp = self.call("slsp/CT/execute", {"name": small, "partialResultToken": "stream-1"})
            if resp.error is not None:
                raise resp.error
            batches = [m.params["value"] for m in self.notifications
                       if m.method == "$/progress" and m.params.get("token") == "stream-1"]
            ids = [c["id"] for b in batches for c in b]
            _require(resp.result == [], [], resp.result)
            _require(ids == list(range(1, found[small] + 1)), f"streamed ids 1..{found[small]}", ids)
            return f"{len(batches)} batches"

        self.check("slsp/CT/execute: streaming", streaming)
        self.invalid_params("slsp/CT/execute", {})

        def cancellation() -> str:
            self.notifications.clear()
            rid = self.conn.send_request("slsp/CT/execute", {"name": big, "partialResultToken": "cancel-1"})
            while True:
                msg = self.conn.next_message(self.timeout)
                if msg.is_response and msg.id == rid:
                    _require(False, {"error": {"code": REQUEST_CANCELLED}}, msg.to_json(),
                             "completed before the first batch arrived")
                if msg.is_notification and msg.method == "$/progress":
                    break
            self.conn.cancel(rid)
            resp = self.conn.wait_response(rid, self.timeout, self.notifications.append)
            want = {"error": {"code": REQUEST_CANCELLED}}
            _require(resp.error is not None and resp.error.code == REQUEST_CANCELLED, want, resp.to_json())
            return f"{big} cancelled after first batch"

        self.check("slsp/CT/execute: cancellation", cancellation)

    def run_tr(self, languages: list) -> None:
        def translate(lang: str) -> Callable[[], str]:
            def body() -> str:
                out = Path(tempfile.mkdtemp(prefix=f"slsp-{lang}-", dir=self.root.parent))
                res = self.result("slsp/TR/translate", {"languageId": lang, "saveUri": path_to_uri(out)})
                _require(isinstance(res, dict) and isinstance(res.get("uri"), str), {"uri": "string"}, res)
                path = uri_to_path(res["uri"])
                _require(path.is_file() and path.parent == out, f"a file under {out}", res["uri"])
                return path.name
            return body

        for lang in languages:
            self.check(f"slsp/TR/translate: valid ({lang})", translate(lang))
        self.invalid_params("slsp/TR/translate", {"languageId": languages[0] if languages else "markdown"})

    def run_tp(self) -> None:
        names: list = []

        def lemmas() -> str:
            found = [S.Lemma.from_json(x) for x in self.result("slsp/TP/lemmas", {})]
            names.extend(f"{lem.theory}.{lem.name}" for lem in found)
            _require(bool(names), "at least one lemma", [lem.to_json() for lem in found])
            return f"{len(names)} lemmas"

        self.check("slsp/TP/lemmas: valid", lemmas)
        self.invalid_params("slsp/TP/lemmas", {"projectUri": 42})

        def get_commands() -> str:
            cmds = [S.TPCommand.from_json(c) for c in self.result("slsp/TP/getCommands", {})]
            _require(bool(cmds) and all(c.description for c in cmds),
                     "commands with descriptions", [c.to_json() for c in cmds])
            return ", ".join(c.name for c in cmds)

        self.check("slsp/TP/getCommands: valid", get_commands)
        self.invalid_params("slsp/TP/getCommands", [])
        if not names:
            return
        target = "Bank.Refl" if "Bank.Refl" in names else names[0]

        def begin() -> str:
            state = S.ProofState.from_json(self.result("slsp/TP/beginProof", {"name": target}))
            _require(state.id == 0, {"id": 0}, state.to_json())
            return f"{target}: {len(state.subgoals)} subgoal(s)"

        self.check("slsp/TP/beginProof: valid", begin)
        self.invalid_params("slsp/TP/beginProof", {})

        def command() -> str:
            res = S.TPCommandResponse.from_json(self.result("slsp/TP/command", {"command": "intro"}))
            _require(res.state.id == 1, {"state": {"id": 1}}, res.to_json())
            return res.description

        self.check("slsp/TP/command: valid", command)
        self.invalid_params("slsp/TP/command", {})

        def undo() -> str:
            state = S.ProofState.from_json(self.result("slsp/TP/undo", {}))
            _require(state.id == 0, {"id": 0}, state.to_json())
            return "back to step 0"

        self.check("slsp/TP/undo: valid", undo)
        self.invalid_params("slsp/TP/undo", {"id": "first"})

        def prove() -> str:
            res = S.TPProveResponse.from_json(self.result("slsp/TP/prove", {"name": target}))
            _require(res.status == "proved", {"status": "proved"}, res.to_json())
            return f"{target} in {res.processingTime} ms"

        self.check("slsp/TP/prove: valid", prove)
        self.invalid_params("slsp/TP/prove", {"name": 5})
        slow = "Load.Wide" if "Load.Wide" in names else names[-1]

        def cancellation() -> str:
            rid = self.conn.send_request("slsp/TP/prove", {"name": slow})
            self.conn.cancel(rid)
            resp = self.conn.wait_response(rid, self.timeout, self.notifications.append)
            want = {"error": {"code": REQUEST_CANCELLED}}
            _require(resp.error is not None and resp.error.code == REQUEST_CANCELLED, want, resp.to_json())
            return f"{slow} cancelled"

        self.check("slsp/TP/prove: cancellation", cancellation)

    def probe_gating(self, feature: str) -> None:
        method, params = GATING_PROBES[feature]
        self.check(f"{method}: refused without {feature} capability",
                   lambda: self.expect_error(method, params(self.root_uri), None))


def conformance_suite(server_cmd, timeout: float = DEFAULT_TIMEOUT) -> ConformanceReport:
    """Run the suite against a fresh server in a scratch copy of the fixture project."""
    with tempfile.TemporaryDirectory(prefix="slsp-conformance-") as tmp:
        root = Path(tmp) / "project"
        shutil.copytree(fixture_dir(), root)
        conn = ServerConnection(server_cmd, cwd=tmp)
        suite = Suite(conn, root.resolve(), timeout)
        try:
            _run(suite)
        finally:
            conn.shutdown(timeout)
        return suite.report


def _run(suite: Suite) -> None:
    try:
        init = suite.conn.initialize(suite.root_uri, suite.timeout)
        caps = S.SlspCapabilities.from_initialize_result(init)
        suite.report.add("initialize", True, detail="announces " + (",".join(sorted(caps.features())) or "nothing"))
    except Exception as exc:  # noqa: BLE001 - reported, never raised
        suite.report.add("initialize", False, "InitializeResult with SLSP capabilities", str(exc))
        return
    features = caps.features()
    runners = {
        "POG": suite.run_pog,
        "CT": suite.run_ct,
        "TR": lambda: suite.run_tr(list(caps.translateProvider.languageId)),
        "TP": suite.run_tp,
    }
    for feature, runner in runners.items():
        if feature in features:
            runner()
        else:
            for method in FEATURE_METHODS[feature]:
                suite.report.skip(method, f"{feature} not announced")
            suite.probe_gating(feature)
