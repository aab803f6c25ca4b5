"""SLSP server runtime and the MiniSpec reference server executable.

A connection runs two flows: the reader decodes frames, records
cancellations immediately and queues everything else; the handler (the
caller of ``serve``) processes queued messages one at a time and owns the
workspace.
"""

from __future__ import annotations

import argparse
import logging
import os
import queue
import socket
import sys
import threading
from dataclasses import dataclass
from typing import Any, Callable, Optional

from . import __version__
from . import schema as S
from .cancellation import CancellationToken
from .ct import DEFAULT_BATCH_SIZE, CTEngine
from .pog import generate_pos
from .protocol import (
    CONTENT_MODIFIED,
    INTERNAL_ERROR,
    INVALID_PARAMS,
    INVALID_REQUEST,
    METHOD_NOT_FOUND,
    PARSE_ERROR,
    SERVER_NOT_INITIALIZED,
    InvalidMessage,
    MalformedHeader,
    MalformedJson,
    MessageWriter,
    ProtocolError,
    RpcError,
    RpcMessage,
    decode_message,
    dumps,
)
from .prover import ProofEngine, get_commands
from .translate import TRANSLATORS, translate
from .workspace import Workspace, normalize_uri

log = logging.getLogger(__name__)

FEATURES = ("POG", "CT", "TR", "TP")

_EOF = object()


@dataclass
class RequestContext:
    id: Any
    token: CancellationToken
    partial_result_token: Any = None


def to_lsp_diagnostic(d) -> S.Diagnostic:
    return S.Diagnostic(S.Range.from_span(d.span), d.message, d.severity, "minispec")


class SlspServer:
    """Transport-independent message handling.

    ``send`` is called for every outbound message; ``handle`` processes one
    inbound message synchronously.
    """

    def __init__(
        self,
        features=FEATURES,
        batch_size: int = DEFAULT_BATCH_SIZE,
        enforce_capabilities: bool = True,
        send: Optional[Callable[[RpcMessage], None]] = None,
    ):
        self.features = {f.upper() for f in features}
        unknown = self.features - set(FEATURES)
        if unknown:
            raise ValueError(f"unknown feature(s): {', '.join(sorted(unknown))}")
        self.enforce_capabilities = enforce_capabilities
        self.send = send or (lambda msg: None)
        self.state = "uninitialized"
        self.workspace: Optional[Workspace] = None
        self.ct = CTEngine(batch_size)
        self.tp = ProofEngine()
        self.exit_code: Optional[int] = None
        self._tokens: dict = {}
        self._tokens_lock = threading.Lock()
        self._requests = {
            "initialize": (self.on_initialize, None),
            "shutdown": (self.on_shutdown, None),
            "slsp/POG/generate": (self.pog_generate, "POG"),
            "slsp/CT/traces": (self.ct_traces, "CT"),
            "slsp/CT/generate": (self.ct_generate, "CT"),
            "slsp/CT/execute": (self.ct_execute, "CT"),
            "slsp/TR/translate": (self.tr_translate, "TR"),
            "slsp/TP/lemmas": (self.tp_lemmas, "TP"),
            "slsp/TP/beginProof": (self.tp_begin_proof, "TP"),
            "slsp/TP/prove": (self.tp_prove, "TP"),
            "slsp/TP/getCommands": (self.tp_get_commands, "TP"),
            "slsp/TP/command": (self.tp_command, "TP"),
            "slsp/TP/undo": (self.tp_undo, "TP"),
        }
        self._notifications = {
            "initialized": self.on_initialized,
            "exit": self.on_exit,
            "textDocument/didOpen": self.did_open,
            "textDocument/didChange": self.did_change,
            "textDocument/didClose": self.did_close,
        }

    # -- capabilities -------------------------------------------------------------

    def capabilities(self) -> S.SlspCapabilities:
        return S.SlspCapabilities(
            proofObligationProvider="POG" in self.features,
            combinatorialTestProvider="CT" in self.features,
            translateProvider=S.TranslateProvider(sorted(TRANSLATORS)) if "TR" in self.features else None,
            theoremProvingProvider="TP" in self.features,
        )

    # -- cancellation (reader side) -------------------------------------------------

    def register(self, msg: RpcMessage) -> Optional[RpcMessage]:
        """Reader-side hook: act on cancellations at once, return anything else for queueing."""
        if msg.is_notification and msg.method == "$/cancelRequest":
            if isinstance(msg.params, dict):
                with self._tokens_lock:
                    token = self._tokens.get(msg.params.get("id"))
                if token is not None:
                    token.cancel()
            return None
        if msg.is_request:
            with self._tokens_lock:
                self._tokens[msg.id] = CancellationToken(msg.id)
        return msg

    def _token_for(self, request_id) -> CancellationToken:
        with self._tokens_lock:
            return self._tokens.setdefault(request_id, CancellationToken(request_id))

    # -- handler side ----------------------------------------------------------------

    def notify(self, method: str, params: Any) -> None:
        self.send(RpcMessage.notification(method, params))

    def handle(self, msg: RpcMessage) -> None:
        if msg.is_request:
            self._handle_request(msg)
        elif msg.is_notification:
            self._handle_notification(msg)
        # Responses to server-initiated requests are not expected.

    def _handle_notification(self, msg: RpcMessage) -> None:
        if msg.method == "$/cancelRequest":
            self.register(msg)
            return
        handler = self._notifications.get(msg.method)
        if handler is None:
            return
        if self.state == "uninitialized" and msg.method != "exit":
            return
        try:
            params = S.validate_params(msg.method, msg.params)
            handler(params)
        except RpcError as err:
            log.warning("dropping %s: %s", msg.method, err.message)
        except Exception:
            log.exception("notification %s failed", msg.method)

    def _handle_request(self, msg: RpcMessage) -> None:
        token = self._token_for(msg.id)
        try:
            response = RpcMessage.response(msg.id, self._dispatch(msg, token))
        except RpcError as err:
            response = RpcMessage.error_response(msg.id, RpcError(err.code, err.message, err.data))
        except Exception as exc:  # engine bug; keep the connection alive
            log.exception("request %s failed", msg.method)
            response = RpcMessage.error_response(
                msg.id, RpcError(INTERNAL_ERROR, "internal error", f"{type(exc).__name__}: {exc}"))
        finally:
            with self._tokens_lock:
                self._tokens.pop(msg.id, None)
        self.send(response)

    def _dispatch(self, msg: RpcMessage, token: CancellationToken) -> Any:
        method = msg.method
        entry = self._requests.get(method)
        if entry is None:
            raise RpcError(METHOD_NOT_FOUND, f"method not found: {method}")
        handler, feature = entry
        if self.state == "uninitialized" and method != "initialize":
            raise RpcError(SERVER_NOT_INITIALIZED, "server not initialized")
        if self.state == "shutdown":
            raise RpcError(INVALID_REQUEST, "server is shutting down")
        if feature is not None and feature not in self.features and self.enforce_capabilities:
            raise RpcError(METHOD_NOT_FOUND, f"method not found: {method} (feature {feature} not announced)")
        token.check()
        params = S.validate_params(method, msg.params)
        ctx = RequestContext(msg.id, token, getattr(params, "partialResultToken", None))
        version = self.workspace.version if self.workspace else None
        result = handler(params, ctx)
        token.check()
        if self.workspace is not None and version is not None and self.workspace.version != version:
            raise RpcError(CONTENT_MODIFIED, "content modified during request")
        return result

    # -- lifecycle ---------------------------------------------------------------------

    def on_initialize(self, params: S.InitializeParams, ctx: RequestContext) -> dict:
        if self.state != "uninitialized":
            raise RpcError(INVALID_REQUEST, "initialize may only be sent once")
        self.workspace = Workspace(normalize_uri(params.rootUri) if params.rootUri else None)
        self.state = "initializing"
        return {
            "capabilities": {
                "textDocumentSync": {"openClose": True, "change": 1},
                "experimental": {"slsp": self.capabilities().to_json()},
            },
            "serverInfo": {"name": "minispec-slsp", "version": __version__},
        }

    def on_initialized(self, params) -> None:
        if self.state == "initializing":
            self.state = "initialized"

    def on_shutdown(self, params, ctx: RequestContext) -> None:
        self.state = "shutdown"
        return None

    def on_exit(self, params) -> None:
        self.exit_code = 0 if self.state == "shutdown" else 1

    # -- synchronization -----------------------------------------------------------------

    def _content_changed(self, uri: str) -> None:
        ws = self.workspace
        self.tp.invalidate()
        diagnostics = [to_lsp_diagnostic(d).to_json() for d in ws.diagnostics_for(uri)]
        self.notify("textDocument/publishDiagnostics", {
            "uri": normalize_uri(uri), "version": ws.version, "diagnostics": diagnostics,
        })
        if "POG" in self.features:
            self.notify("slsp/POG/updated", {"successful": ws.ok})

    def did_open(self, params: S.DidOpenParams) -> None:
        doc = params.textDocument
        self.workspace.open(doc.uri, doc.text)
        self._content_changed(doc.uri)

    def did_change(self, params: S.DidChangeParams) -> None:
        uri = params.textDocument.uri
        self.workspace.change(uri, params.contentChanges[-1].text)
        self._content_changed(uri)

    def did_close(self, params: S.DidCloseParams) -> None:
        uri = params.textDocument.uri
        self.workspace.close(uri)
        self._content_changed(uri)

    # -- helpers ------------------------------------------------------------------------

    def _scope(self, uri: Optional[str]) -> list:
        ws = self.workspace
        if uri is None:
            return ws.files_under()
        uri = normalize_uri(uri)
        if not ws.contains(uri):
            raise RpcError(INVALID_PARAMS, f"{uri} is outside the workspace")
        files = ws.files_under(uri)
        if not files:
            raise RpcError(INVALID_PARAMS, f"no specification files at {uri}")
        return files

    def _require_clean(self) -> None:
        errors = self.workspace.errors()
        if errors:
            uri, d = errors[0]
            raise RpcError(INTERNAL_ERROR, "the specification has errors",
                           {"uri": uri, "message": d.message, "count": len(errors)})

    def stream_progress(self, token: Any, batch: list) -> None:
        self.notify("$/progress", {"token": token, "value": [c.to_json() for c in batch]})

    # -- POG ------------------------------------------------------------------------------

    def pog_generate(self, params: S.POGGenerateParams, ctx: RequestContext) -> list:
        files = self._scope(params.uri)
        self._require_clean()
        return [po.to_json() for po in generate_pos(files, ctx.token)]

    # -- CT ---------------------------------------------------------------------------------

    def ct_traces(self, params: S.CTTracesParams, ctx: RequestContext) -> list:
        return [s.to_json() for s in self.ct.traces(self._scope(params.uri))]

    def ct_generate(self, params: S.CTGenerateParams, ctx: RequestContext) -> dict:
        expanded = self.ct.generate(self.workspace.files_under(), params.name, self.workspace.version)
        return {"numberOfTests": len(expanded.tests)}

    def ct_execute(self, params: S.CTExecuteParams, ctx: RequestContext) -> list:
        progress = None
        if ctx.partial_result_token is not None:
            token = ctx.partial_result_token
            progress = lambda batch: self.stream_progress(token, batch)  # noqa: E731
        cases = self.ct.execute(self.workspace.files_under(), params, self.workspace.version,
                                progress, ctx.token)
        return [c.to_json() for c in cases]

    # -- TR ---------------------------------------------------------------------------------

    def tr_translate(self, params: S.TRTranslateParams, ctx: RequestContext) -> dict:
        files = self._scope(params.uri)
        return {"uri": translate(files, params.languageId, params.saveUri)}

    # -- TP -----------------------------------------------------------------------------------

    def tp_lemmas(self, params: S.TPLemmasParams, ctx: RequestContext) -> list:
        return [lemma.to_json() for lemma in self.tp.lemmas(self._scope(params.projectUri))]

    def tp_begin_proof(self, params: S.TPBeginProofParams, ctx: RequestContext) -> dict:
        ws = self.workspace
        return self.tp.begin_proof(ws.files_under(), params.name, ws.version).to_json()

    def tp_prove(self, params: S.TPProveParams, ctx: RequestContext) -> dict:
        ws = self.workspace
        return self.tp.prove(ws.files_under(), params.name, ws.version, ctx.token).to_json()

    def tp_get_commands(self, params, ctx: RequestContext) -> list:
        return [c.to_json() for c in get_commands()]

    def tp_command(self, params: S.TPCommandParams, ctx: RequestContext) -> dict:
        return self.tp.command(params.command, ctx.token).to_json()

    def tp_undo(self, params: S.TPUndoParams, ctx: RequestContext) -> dict:
        return self.tp.undo(params.id).to_json()


class Connection:
    """Runs an ``SlspServer`` over a pair of byte streams."""

    def __init__(self, server: SlspServer, reader, writer, transcript=None):
        self.server = server
        self.reader = reader
        self.transcript = transcript
        self._transcript_lock = threading.Lock()
        self.writer = MessageWriter(writer, on_write=lambda m: self._record("<--", m))
        server.send = self.writer.write
        self.inbox: queue.Queue = queue.Queue()

    def _record(self, direction: str, msg: RpcMessage) -> None:
        if self.transcript is not None:
            with self._transcript_lock:
                self.transcript.write(f"{direction} {dumps(msg.to_json())}\n")
                self.transcript.flush()

    def _read_loop(self) -> None:
        try:
            while True:
                try:
                    msg = decode_message(self.reader)
                except MalformedJson as exc:
                    self.writer.write(RpcMessage.error_response(None, RpcError(PARSE_ERROR, f"parse error: {exc}")))
                    continue
                except InvalidMessage as exc:
                    self.writer.write(RpcMessage.error_response(exc.id, RpcError(INVALID_REQUEST, str(exc))))
                    continue
                if msg is None:
                    break
                self._record("-->", msg)
                msg = self.server.register(msg)
                if msg is not None:
                    self.inbox.put(msg)
        except MalformedHeader as exc:
            log.error("fatal framing error: %s", exc)
        except (ProtocolError, OSError, ValueError) as exc:
            log.error("connection lost: %s", exc)
        finally:
            self.inbox.put(_EOF)

    def serve(self) -> int:
        threading.Thread(target=self._read_loop, name="slsp-reader", daemon=True).start()
        while True:
            msg = self.inbox.get()
            if msg is _EOF:
                return 1 if self.server.exit_code is None else self.server.exit_code
            self.server.handle(msg)
            if self.server.exit_code is not None:
                return self.server.exit_code


def _parse_features(text: str) -> list:
    return [f.strip().upper() for f in text.split(",") if f.strip()]


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="slsp-server", description="MiniSpec SLSP reference server")
    mode = ap.add_mutually_exclusive_group()
    mode.add_argument("--stdio", action="store_true", help="serve over standard input/output (default)")
    mode.add_argument("--tcp", type=int, metavar="PORT", help="listen on 127.0.0.1:PORT for one client")
    ap.add_argument("--batch-size", type=int, default=DEFAULT_BATCH_SIZE,
                    help="test cases per $/progress batch (default %(default)s)")
    ap.add_argument("--log", metavar="FILE", help="write a wire transcript, one frame per line")
    ap.add_argument("--features", default="pog,ct,tr,tp",
                    help="comma-separated features to announce (default %(default)s)")
    ap.add_argument("--no-capability-gating", action="store_true",
                    help="answer methods of unannounced features (for conformance-suite testing)")
    args = ap.parse_args(argv)
    if args.batch_size < 1:
        ap.error("--batch-size must be positive")

    logging.basicConfig(stream=sys.stderr, level=logging.WARNING,
                        format="slsp-server: %(levelname)s %(message)s")
    sys.setrecursionlimit(max(sys.getrecursionlimit(), 20000))
    try:
        server = SlspServer(_parse_features(args.features), args.batch_size,
                            enforce_capabilities=not args.no_capability_gating)
    except ValueError as exc:
        ap.error(str(exc))
    transcript = open(args.log, "w", encoding="utf-8") if args.log else None
    try:
        if args.tcp is not None:
            with socket.create_server(("127.0.0.1", args.tcp)) as listener:
                conn, _ = listener.accept()
                with conn, conn.makefile("rb") as rf, conn.makefile("wb") as wf:
                    return Connection(server, rf, wf, transcript).serve()
        code = Connection(server, sys.stdin.buffer, sys.stdout.buffer, transcript).serve()
    finally:
        if transcript is not None:
            transcript.close()
    # The reader thread may still be blocked on stdin; a normal interpreter
    # shutdown would abort trying to finalize that buffer.
    sys.stdout.flush()
    sys.stderr.flush()
    os._exit(code)


if __name__ == "__main__":
    sys.exit(main())
