import io
import json
import sys

import pytest

from slsp.client import cli
from slsp.client.connection import (
    ServerConnection,
    ServerSpawnFailure,
    TimeoutWaitingForMessage,
    default_server_command,
)
from slsp.client.repl import interactive_prove
from slsp.client.script import ScriptError, load_script, matches, normalize_transcript, run_script
from slsp.protocol import METHOD_NOT_FOUND, RpcError
from slsp.workspace import path_to_uri

from conftest import GOLDEN

SILENT_SERVER = [sys.executable, "-c", "import sys; sys.stdin.buffer.read()"]


@pytest.mark.parametrize("pattern, value, ok", [
    ({"a": 1}, {"a": 1}, True),
    ({"a": 1}, {"a": 1, "b": 2}, False),
    ({"a": "$any"}, {"a": [1, {"x": None}]}, True),
    ({"a": "$any"}, {}, False),
    ("$id", 7, True),
    ("$id", 8, False),
    ([1, "$any"], [1, 2], True),
    ([1], [1, 2], False),
    (True, 1, False),
    (1, 1.0, True),
])
def test_matches(pattern, value, ok):
    assert matches(pattern, value, current_id=7) is ok


def test_normalize_transcript():
    frames = [
        ("-->", {"jsonrpc": "2.0", "id": 40, "method": "m", "params": {"uri": "file:///r/A.ms"}}),
        ("-->", {"jsonrpc": "2.0", "method": "$/cancelRequest", "params": {"id": 40}}),
        ("<--", {"jsonrpc": "2.0", "id": 40, "result": "/r/A.ms"}),
        ("-->", {"jsonrpc": "2.0", "id": "x", "method": "m"}),
    ]
    assert normalize_transcript(frames, "file:///r", "/r").splitlines() == [
        '--> {"jsonrpc":"2.0","id":1,"method":"m","params":{"uri":"${rootUri}/A.ms"}}',
        '--> {"jsonrpc":"2.0","method":"$/cancelRequest","params":{"id":1}}',
        '<-- {"jsonrpc":"2.0","id":1,"result":"${rootUri}/A.ms"}',
        '--> {"jsonrpc":"2.0","id":2,"method":"m"}',
    ]


@pytest.mark.parametrize("steps", [
    [{"send": {}}],
    [{"send": {"params": {}}}],
    [{"sleep": -1}],
    [{"wait": 1}],
    [{"send": {"method": "m"}, "expect": {}}],
])
def test_bad_scripts(steps):
    with pytest.raises(ScriptError):
        load_script(steps)


def test_script_file_must_be_an_array(tmp_path):
    path = tmp_path / "s.json"
    path.write_text('{"send": {"method": "m"}}')
    with pytest.raises(ScriptError):
        load_script(path)


def test_spawn_failure():
    with pytest.raises(ServerSpawnFailure):
        ServerConnection(["/nonexistent/slsp-server"])


def test_timeout_on_silent_server():
    with ServerConnection(SILENT_SERVER) as conn:
        with pytest.raises(TimeoutWaitingForMessage):
            conn.request("initialize", {"capabilities": {}}, timeout=0.3)
        conn.close(2.0)


def test_silent_server_fails_script():
    result = run_script(SILENT_SERVER, [{"send": {"method": "shutdown", "id": 1}}], timeout=0.3)
    assert result.report.failed == 1


def test_unknown_method(server_process, tmp_path):
    conn = server_process(tmp_path)
    with pytest.raises(RpcError) as exc:
        conn.request("slsp/XX/nothing", {})
    assert exc.value.code == METHOD_NOT_FOUND
    assert conn.shutdown() == 0


def test_script_expectations(tmp_path):
    steps = [
        {"send": {"id": 1, "method": "slsp/TP/getCommands"}},
        {"expect": {"jsonrpc": "2.0", "id": "$id", "result": "$any"}},
        {"send": {"id": 2, "method": "slsp/TP/getCommands"}},
        {"expect": {"jsonrpc": "2.0", "id": "$id", "result": []}},
    ]
    report = run_script(default_server_command(), steps, tmp_path).report
    assert [c.verdict for c in report.checks] == ["pass", "pass", "fail"]


def test_session_transcripts_are_reproducible():
    script = GOLDEN.parent.parent / "src" / "slsp" / "client" / "scripts" / "pog_session.json"
    first = run_script(default_server_command(), script)
    second = run_script(default_server_command(), script)
    assert first.report.failed == 0
    assert first.transcript == second.transcript
    assert first.exit_code == 0


def test_repl(server_process, corpus_copy):
    conn = server_process(corpus_copy)
    stdin = io.StringIO("intro\nsplit\n:undo\nbogus\n:undo x\n:frob\n:help\nauto\n")
    stdout = io.StringIO()
    assert interactive_prove(conn, "Logic.Refl", stdin, stdout) == 0
    text = stdout.getvalue()
    assert "[0] open\n  1. |- p => p" in text
    assert "error -32602: split needs a conjunction goal" in text
    assert "error -32602: unknown command 'bogus'" in text
    assert "usage: :undo [id]" in text
    assert "unknown directive :frob" in text
    assert "proof complete" in text and text.rstrip().endswith("proved")


def test_repl_auto_reports_counterexample(server_process, corpus_copy):
    conn = server_process(corpus_copy)
    stdout = io.StringIO()
    assert interactive_prove(conn, "Logic.Converse", io.StringIO(":auto\n"), stdout) == 1
    assert "counterexample: p=true,q=false" in stdout.getvalue()


def test_cli_ct(corpus_copy, capsys):
    assert cli.main(["ct", "Arith.alt", "--root", str(corpus_copy)]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[-1] == "2 tests, 0 failed"
    assert cli.main(["ct", "Arith.crash", "--root", str(corpus_copy)]) == 1
    assert cli.main(["ct", "Arith.nope", "--root", str(corpus_copy)]) == 1
    assert "server error -32602" in capsys.readouterr().err


def test_cli_translate(corpus_copy, tmp_path, capsys):
    out = tmp_path / "doc"
    out.mkdir()
    assert cli.main(["translate", "--language", "markdown", "--save", str(out), "--root", str(corpus_copy)]) == 0
    assert capsys.readouterr().out.strip() == path_to_uri(out / "Arith.md")


def test_cli_session_against_golden(tmp_path, capsys):
    script = GOLDEN.parent.parent / "src" / "slsp" / "client" / "scripts" / "pog_session.json"
    transcript = tmp_path / "t.txt"
    code = cli.main(["session", str(script), "--golden", str(GOLDEN / "pog_session.transcript"),
                     "--transcript", str(transcript)])
    assert code == 0
    assert transcript.read_text() == (GOLDEN / "pog_session.transcript").read_text()


def test_cli_conformance_json(tmp_path, capsys):
    report = tmp_path / "r.json"
    server = " ".join(default_server_command("--features", "pog"))
    assert cli.main(["conformance", "--server", server, "--json", str(report)]) == 0
    summary = json.loads(report.read_text())["summary"]
    assert summary["fail"] == 0 and summary["skip"] > 0


def test_cli_bad_server(capsys):
    assert cli.main(["ct", "M.t", "--server", "/nonexistent/server"]) == 1
    assert "cannot start" in capsys.readouterr().err
