"""``slsp-client`` command line."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

from .. import schema as S
from ..protocol import RpcError, dumps
from ..workspace import path_to_uri
from .connection import (
    ServerClosed,
    ServerConnection,
    ServerSpawnFailure,
    TimeoutWaitingForMessage,
    default_server_command,
)
from .repl import interactive_prove
from .script import ScriptError, run_script
from .suite import conformance_suite


def _server(args) -> list:
    return args.server if args.server else default_server_command()


def _parse_range(text: str) -> dict:
    start, sep, end = text.partition(":")
    try:
        out = {"start": int(start)} if start else {}
        if sep and end:
            out["end"] = int(end)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad range {text!r}; expected a:b") from None
    return out


def cmd_session(args) -> int:
    try:
        result = run_script(_server(args), args.script, args.root, args.timeout)
    except ScriptError as exc:
        print(f"slsp-client: {exc}", file=sys.stderr)
        return 2
    report = result.report
    if args.transcript:
        Path(args.transcript).write_text(result.transcript, encoding="utf-8")
    if args.golden:
        golden = Path(args.golden).read_text(encoding="utf-8")
        report.add("transcript matches golden", result.transcript == golden,
                   golden, result.transcript)
    print(report.text())
    return 0 if report.failed == 0 else 1


def cmd_conformance(args) -> int:
    report = conformance_suite(_server(args), args.timeout)
    print(report.text())
    if args.json:
        Path(args.json).write_text(json.dumps(report.to_json(), indent=2) + "\n", encoding="utf-8")
    return 0 if report.failed == 0 else 1


def _connect(args) -> ServerConnection:
    conn = ServerConnection(_server(args))
    conn.initialize(path_to_uri(Path(args.root).resolve()), args.timeout)
    return conn


def cmd_prove(args) -> int:
    conn = _connect(args)
    try:
        return interactive_prove(conn, args.lemma)
    finally:
        conn.shutdown(args.timeout)


def cmd_ct(args) -> int:
    conn = _connect(args)
    try:
        params: dict = {"name": args.trace}
        if args.range:
            params["range"] = args.range
        flt = []
        if args.limit is not None:
            flt.append({"key": "random.limit", "value": args.limit})
        if args.seed is not None:
            flt.append({"key": "random.seed", "value": args.seed})
        if flt:
            params["filter"] = flt
        cases = [S.CTTestCase.from_json(c) for c in conn.request("slsp/CT/execute", params, args.timeout)]
        failed = 0
        for case in cases:
            calls = "; ".join(c.case if c.result is None else f"{c.case} = {c.result}" for c in case.sequence)
            print(f"{case.id:>6} {case.verdict.name:<12} {calls}")
            failed += case.verdict == S.Verdict.FAILED
        print(f"{len(cases)} tests, {failed} failed")
        return 0 if failed == 0 else 1
    finally:
        conn.shutdown(args.timeout)


def cmd_translate(args) -> int:
    conn = _connect(args)
    try:
        save = path_to_uri(Path(args.save).resolve())
        res = conn.request("slsp/TR/translate", {"languageId": args.language, "saveUri": save}, args.timeout)
        print(res["uri"])
        return 0
    finally:
        conn.shutdown(args.timeout)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="slsp-client", description="SLSP conformance client")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--server",
                        help="server command line (default: the bundled reference server)")
    common.add_argument("--timeout", type=float, default=10.0, help="seconds to wait per message")
    project = argparse.ArgumentParser(add_help=False)
    project.add_argument("--root", default=".", help="project directory (default: current directory)")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("session", parents=[common], help="run a scripted session")
    p.add_argument("script", help="JSON session script")
    p.add_argument("--root", help="project directory (default: an empty scratch directory)")
    p.add_argument("--transcript", help="write the normalized transcript here")
    p.add_argument("--golden", help="compare the normalized transcript with this file")
    p.set_defaults(func=cmd_session)

    p = sub.add_parser("conformance", parents=[common], help="run the conformance suite")
    p.add_argument("--json", help="also write the report as JSON")
    p.set_defaults(func=cmd_conformance)

    p = sub.add_parser("prove", parents=[common, project], help="prove a lemma interactively")
    p.add_argument("lemma")
    p.set_defaults(func=cmd_prove)

    p = sub.add_parser("ct", parents=[common, project], help="execute a combinatorial trace")
    p.add_argument("trace", help="qualified trace name, e.g. Module.trace")
    p.add_argument("--range", type=_parse_range, help="test ids a:b (1-based, inclusive)")
    p.add_argument("--seed", type=int)
    p.add_argument("--limit", type=int)
    p.set_defaults(func=cmd_ct)

    p = sub.add_parser("translate", parents=[common, project], help="translate the project")
    p.add_argument("--language", required=True, help="languageId, e.g. latex or markdown")
    p.add_argument("--save", required=True, help="output directory")
    p.set_defaults(func=cmd_translate)
    return ap


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ServerSpawnFailure as exc:
        print(f"slsp-client: {exc}", file=sys.stderr)
    except RpcError as err:
        print(f"slsp-client: server error {err.code}: {err.message}"
              + (f" ({dumps(err.data)})" if err.data is not None else ""), file=sys.stderr)
    except (TimeoutWaitingForMessage, ServerClosed) as exc:
        print(f"slsp-client: {exc}", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
