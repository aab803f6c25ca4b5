from __future__ import annotations

import threading

from .protocol import REQUEST_CANCELLED, RpcError


class RequestCancelled(RpcError):
    def __init__(self, message: str = "request cancelled"):
        super().__init__(REQUEST_CANCELLED, message)


class CancellationToken:
    """Set-once flag shared between the reader (sets) and the handler (polls)."""

    def __init__(self, request_id=None):
        self.request_id = request_id
        self._event = threading.Event()

    def cancel(self) -> None:
        self._event.set()

    @property
    def cancelled(self) -> bool:
        return self._event.is_set()

    def check(self) -> None:
        if self._event.is_set():
            raise RequestCancelled()


class _NeverCancelled(CancellationToken):
    def cancel(self) -> None:
        raise RuntimeError("NEVER token cannot be cancelled")


NEVER = _NeverCancelled()
