from __future__ import annotations

import shutil
import sys
from pathlib import Path

import pytest

from slsp import schema as S
from slsp.client.connection import ServerConnection, default_server_command
from slsp.protocol import IdCounter, RpcMessage
from slsp.server import SlspServer
from slsp.workspace import Workspace, path_to_uri

TESTS = Path(__file__).resolve().parent
CORPUS = TESTS / "corpus"
GOLDEN = TESTS / "golden"

sys.path.insert(0, str(TESTS))
sys.setrecursionlimit(max(sys.getrecursionlimit(), 20000))


@pytest.fixture
def corpus_copy(tmp_path) -> Path:
    """Scratch copy of the corpus so tests can write next to it."""
    root = tmp_path / "corpus"
    shutil.copytree(CORPUS, root)
    return root


@pytest.fixture(scope="session")
def corpus_workspace() -> Workspace:
    return Workspace(path_to_uri(CORPUS))


class Harness:
    """Drives an in-process ``SlspServer`` and keeps everything it sends."""

    def __init__(self, root: Path | None, **kwargs):
        self.sent: list = []
        self.server = SlspServer(send=self.sent.append, **kwargs)
        self.ids = IdCounter()
        self.root_uri = path_to_uri(root) if root is not None else None

    def send(self, msg: RpcMessage) -> None:
        msg = self.server.register(msg)
        if msg is not None:
            self.server.handle(msg)

    def request(self, method: str, params=None) -> RpcMessage:
        rid = self.ids.next()
        self.send(RpcMessage.request(rid, method, params))
        responses = [m for m in self.sent if m.is_response and m.id == rid]
        assert len(responses) == 1
        return responses[0]

    def result(self, method: str, params=None):
        resp = self.request(method, params)
        assert resp.error is None, resp.error
        return resp.result

    def notify(self, method: str, params=None) -> None:
        self.send(RpcMessage.notification(method, params))

    def notifications(self, method: str) -> list:
        return [m for m in self.sent if m.is_notification and m.method == method]

    def initialize(self) -> dict:
        result = self.result("initialize", {"rootUri": self.root_uri, "capabilities": {}})
        self.notify("initialized", {})
        return result

    def open(self, name: str, text: str, version: int = 1) -> str:
        uri = f"{self.root_uri}/{name}"
        self.notify("textDocument/didOpen", {"textDocument": {
            "uri": uri, "languageId": "minispec", "version": version, "text": text}})
        return uri


@pytest.fixture
def harness(tmp_path):
    def make(root: Path | None = None, initialize: bool = True, **kwargs) -> Harness:
        h = Harness(root if root is not None else tmp_path, **kwargs)
        if initialize:
            h.initialize()
        return h
    return make


@pytest.fixture
def server_process():
    """Factory for reference-server subprocesses initialized on a root directory."""
    conns: list = []

    def spawn(root: Path, *extra: str) -> ServerConnection:
        conn = ServerConnection(default_server_command(*extra))
        conns.append(conn)
        conn.initialize(path_to_uri(root))
        return conn

    yield spawn
    for conn in conns:
        if conn.proc.poll() is None:
            conn.shutdown(5.0)


def cases_json(cases) -> list:
    return [S.CTTestCase.from_json(c).to_json() for c in cases]


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
