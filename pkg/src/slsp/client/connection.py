"""Client side of one SLSP connection to a server subprocess."""

from __future__ import annotations

import os
import queue
import shlex
import subprocess
import sys
import threading
import time
from typing import Any, Callable, Optional, Union

from ..protocol import (
    IdCounter,
    MessageWriter,
    ProtocolError,
    RpcError,
    RpcMessage,
    decode_message,
)

DEFAULT_TIMEOUT = 10.0

_CLOSED = object()


class TimeoutWaitingForMessage(Exception):
    pass


class ServerSpawnFailure(Exception):
    pass


class ServerClosed(Exception):
    """The server closed its output stream."""


def server_argv(cmd: Union[str, list]) -> list:
    return shlex.split(cmd) if isinstance(cmd, str) else list(cmd)


def default_server_command(*extra: str) -> list:
    """Command line that runs the bundled reference server with this interpreter."""
    return [sys.executable, "-m", "slsp.server", *extra]


class ServerConnection:
    """Spawns a server and exchanges framed messages with it.

    A reader thread decodes every inbound frame into a queue; callers pull
    messages with ``next_message`` in arrival order.  ``transcript`` holds
    ``(direction, json)`` pairs for every frame sent or consumed.
    """

    def __init__(self, cmd: Union[str, list], cwd: Optional[str] = None,
                 stderr=subprocess.DEVNULL):
        argv = server_argv(cmd)
        try:
            self.proc = subprocess.Popen(argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                                         stderr=stderr, cwd=cwd, env=os.environ.copy())
        except OSError as exc:
            raise ServerSpawnFailure(f"cannot start {argv[0]!r}: {exc}") from None
        self.ids = IdCounter()
        self.writer = MessageWriter(self.proc.stdin)
        self.transcript: list = []
        self._inbox: queue.Queue = queue.Queue()
        self._closed = False
        self._reader = threading.Thread(target=self._read_loop, name="slsp-client-reader", daemon=True)
        self._reader.start()

    def _read_loop(self) -> None:
        try:
            while True:
                msg = decode_message(self.proc.stdout)
                if msg is None:
                    break
                self._inbox.put(msg)
        except (ProtocolError, OSError, ValueError):
            pass
        finally:
            self._inbox.put(_CLOSED)

    # -- sending ---------------------------------------------------------------

    def send(self, msg: RpcMessage) -> None:
        self.transcript.append(("-->", msg.to_json()))
        try:
            self.writer.write(msg)
        except (BrokenPipeError, ValueError, OSError) as exc:
            raise ServerClosed(f"cannot write to server: {exc}") from None

    def send_request(self, method: str, params: Any = None, id: Any = None) -> Any:
        request_id = self.ids.next() if id is None else id
        self.send(RpcMessage.request(request_id, method, params))
        return request_id

    def send_notification(self, method: str, params: Any = None) -> None:
        self.send(RpcMessage.notification(method, params))

    def cancel(self, request_id: Any) -> None:
        self.send_notification("$/cancelRequest", {"id": request_id})

    # -- receiving -------------------------------------------------------------

    def next_message(self, timeout: float = DEFAULT_TIMEOUT) -> RpcMessage:
        if self._closed:
            raise ServerClosed("server closed the connection")
        try:
            msg = self._inbox.get(timeout=timeout)
        except queue.Empty:
            raise TimeoutWaitingForMessage(f"no message from server within {timeout:g} s") from None
        if msg is _CLOSED:
            self._closed = True
            raise ServerClosed("server closed the connection")
        self.transcript.append(("<--", msg.to_json()))
        return msg

    def wait_response(self, request_id: Any, timeout: float = DEFAULT_TIMEOUT,
                      on_other: Optional[Callable[[RpcMessage], None]] = None) -> RpcMessage:
        """Consume messages until the response to ``request_id``; others go to ``on_other``."""
        deadline = time.monotonic() + timeout
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise TimeoutWaitingForMessage(f"no response to request {request_id!r} within {timeout:g} s")
            msg = self.next_message(remaining)
            if msg.is_response and msg.id == request_id:
                return msg
            if on_other is not None:
                on_other(msg)

    def request(self, method: str, params: Any = None, timeout: float = DEFAULT_TIMEOUT,
                on_other: Optional[Callable[[RpcMessage], None]] = None) -> Any:
        """Send a request and return its result, raising ``RpcError`` on an error response."""
        rid = self.send_request(method, params)
        resp = self.wait_response(rid, timeout, on_other)
        if resp.error is not None:
            raise resp.error
        return resp.result

    # -- lifecycle -------------------------------------------------------------

    def initialize(self, root_uri: Optional[str], timeout: float = DEFAULT_TIMEOUT,
                   process_id: Optional[int] = -1) -> dict:
        """Handshake; ``process_id=-1`` sends our pid, ``None`` omits it."""
        params: dict = {}
        if process_id is not None:
            params["processId"] = os.getpid() if process_id == -1 else process_id
        params["rootUri"] = root_uri
        params["capabilities"] = {}
        result = self.request("initialize", params, timeout)
        self.send_notification("initialized", {})
        return result

    def shutdown(self, timeout: float = DEFAULT_TIMEOUT) -> Optional[int]:
        """Polite shutdown/exit; returns the server's exit code."""
        try:
            rid = self.send_request("shutdown")
            self.wait_response(rid, timeout)
            self.send_notification("exit")
        except (ServerClosed, TimeoutWaitingForMessage, RpcError):
            pass
        return self.close(timeout)

    def close(self, timeout: float = 5.0) -> Optional[int]:
        try:
            self.proc.stdin.close()
        except OSError:
            pass
        try:
            return self.proc.wait(timeout)
        except subprocess.TimeoutExpired:
            self.proc.kill()
            self.proc.wait()
            return None
        finally:
            self.proc.stdout.close()

    def __enter__(self) -> "ServerConnection":
        return self

    def __exit__(self, *exc) -> None:
        if self.proc.poll() is None:
            self.close(1.0)
