"""Base protocol: header-framed JSON-RPC 2.0 messages over byte streams.

A frame is ``Content-Length: <N>\\r\\n\\r\\n`` followed by ``N`` bytes of
UTF-8 JSON.  Additional header fields are accepted and ignored.
"""

from __future__ import annotations

import enum
import itertools
import json
import threading
from dataclasses import dataclass
from typing import Any, BinaryIO, Optional, Union

JSONRPC_VERSION = "2.0"

# Reserved error codes.
PARSE_ERROR = -32700
INVALID_REQUEST = -32600
METHOD_NOT_FOUND = -32601
INVALID_PARAMS = -32602
INTERNAL_ERROR = -32603
SERVER_NOT_INITIALIZED = -32002
CONTENT_MODIFIED = -32801
REQUEST_CANCELLED = -32800

RequestId = Union[int, str]


class ProtocolError(Exception):
    """Base class for framing and decoding failures."""


class MalformedHeader(ProtocolError):
    """Header section is unusable; the connection cannot be resynchronized."""


class MalformedJson(ProtocolError):
    """The frame was intact but its body is not valid JSON."""


class InvalidMessage(ProtocolError):
    """Valid JSON that is not a JSON-RPC 2.0 message."""

    def __init__(self, message: str, id: Optional[RequestId] = None):
        super().__init__(message)
        self.id = id


class RpcError(Exception):
    """JSON-RPC error object; also raised by handlers to produce an error response."""

    def __init__(self, code: int, message: str, data: Any = None):
        super().__init__(message)
        self.code = code
        self.message = message
        self.data = data

    def to_json(self) -> dict:
        out: dict = {"code": self.code, "message": self.message}
        if self.data is not None:
            out["data"] = self.data
        return out

    @classmethod
    def from_json(cls, obj: Any) -> "RpcError":
        if (
            not isinstance(obj, dict)
            or not isinstance(obj.get("code"), int)
            or isinstance(obj.get("code"), bool)
            or not isinstance(obj.get("message"), str)
        ):
            raise InvalidMessage("malformed error object")
        return cls(obj["code"], obj["message"], obj.get("data"))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RpcError):
            return NotImplemented
        return (self.code, self.message, self.data) == (other.code, other.message, other.data)

    def __hash__(self) -> int:
        return hash((self.code, self.message))

    def __repr__(self) -> str:
        return f"RpcError({self.code}, {self.message!r}, {self.data!r})"


class MessageKind(enum.Enum):
    REQUEST = "request"
    RESPONSE = "response"
    NOTIFICATION = "notification"


def _valid_id(value: Any) -> bool:
    return isinstance(value, str) or (isinstance(value, int) and not isinstance(value, bool))


@dataclass
class RpcMessage:
    kind: MessageKind
    id: Optional[RequestId] = None
    method: Optional[str] = None
    params: Any = None
    result: Any = None
    error: Optional[RpcError] = None

    def __post_init__(self) -> None:
        if self.kind is MessageKind.NOTIFICATION:
            if self.id is not None:
                raise ValueError("notification must not carry an id")
        elif not _valid_id(self.id) and not (self.kind is MessageKind.RESPONSE
                                             and self.id is None and self.error is not None):
            # A null id is only legal on error responses to unreadable requests.
            raise ValueError(f"{self.kind.value} requires an integer or string id")
        if self.kind is MessageKind.RESPONSE:
            if self.method is not None or self.params is not None:
                raise ValueError("response must not carry method or params")
            if self.error is not None and self.result is not None:
                raise ValueError("response carries both result and error")
        else:
            if not isinstance(self.method, str):
                raise ValueError(f"{self.kind.value} requires a method name")
            if self.result is not None or self.error is not None:
                raise ValueError("only responses carry result or error")
            if self.params is not None and not isinstance(self.params, (dict, list)):
                raise ValueError("params must be an object or array")

    @classmethod
    def request(cls, id: RequestId, method: str, params: Any = None) -> "RpcMessage":
        return cls(MessageKind.REQUEST, id=id, method=method, params=params)

    @classmethod
    def notification(cls, method: str, params: Any = None) -> "RpcMessage":
        return cls(MessageKind.NOTIFICATION, method=method, params=params)

    @classmethod
    def response(cls, id: RequestId, result: Any = None) -> "RpcMessage":
        return cls(MessageKind.RESPONSE, id=id, result=result)

    @classmethod
    def error_response(cls, id: RequestId, error: RpcError) -> "RpcMessage":
        return cls(MessageKind.RESPONSE, id=id, error=error)

    @property
    def is_request(self) -> bool:
        return self.kind is MessageKind.REQUEST

    @property
    def is_response(self) -> bool:
        return self.kind is MessageKind.RESPONSE

    @property
    def is_notification(self) -> bool:
        return self.kind is MessageKind.NOTIFICATION

    def to_json(self) -> dict:
        out: dict = {"jsonrpc": JSONRPC_VERSION}
        if self.kind is not MessageKind.NOTIFICATION:
            out["id"] = self.id
        if self.kind is MessageKind.RESPONSE:
            if self.error is not None:
                out["error"] = self.error.to_json()
            else:
                out["result"] = self.result
        else:
            out["method"] = self.method
            if self.params is not None:
                out["params"] = self.params
        return out

    @classmethod
    def from_json(cls, obj: Any) -> "RpcMessage":
        if isinstance(obj, list):
            raise InvalidMessage("batch messages are not supported")
        if not isinstance(obj, dict):
            raise InvalidMessage("message must be a JSON object")
        msg_id = obj.get("id")
        if obj.get("jsonrpc") != JSONRPC_VERSION:
            raise InvalidMessage('missing or wrong "jsonrpc" version tag',
                                 msg_id if _valid_id(msg_id) else None)
        try:
            if "method" in obj:
                if "id" in obj:
                    return cls.request(msg_id, obj["method"], obj.get("params"))
                return cls.notification(obj["method"], obj.get("params"))
            if "id" not in obj:
                raise InvalidMessage("message has neither method nor id")
            has_result, has_error = "result" in obj, "error" in obj
            if has_result == has_error:
                raise InvalidMessage("response must carry exactly one of result/error", msg_id)
            if has_error:
                return cls.error_response(msg_id, RpcError.from_json(obj["error"]))
            return cls.response(msg_id, obj["result"])
        except ValueError as exc:
            raise InvalidMessage(str(exc), msg_id if _valid_id(msg_id) else None) from None


def dumps(obj: Any) -> str:
    """Canonical JSON text: insertion-ordered keys, no insignificant whitespace."""
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False)


def encode_body(body: bytes) -> bytes:
    return b"Content-Length: %d\r\n\r\n" % len(body) + body


def encode_message(msg: RpcMessage) -> bytes:
    return encode_body(dumps(msg.to_json()).encode("utf-8"))


def read_frame(stream: BinaryIO) -> Optional[bytes]:
    """Read one frame body.  Returns ``None`` on end of stream at a frame boundary."""
    length: Optional[int] = None
    first = True
    while True:
        line = stream.readline()
        if not line:
            if first:
                return None
            raise MalformedHeader("stream ended inside the header section")
        first = False
        if not line.endswith(b"\r\n"):
            raise MalformedHeader(f"header line not terminated by CRLF: {line!r}")
        line = line[:-2]
        if not line:
            break
        name, sep, value = line.partition(b":")
        if not sep:
            raise MalformedHeader(f"bad header line: {line!r}")
        if name.strip().lower() == b"content-length":
            try:
                length = int(value.strip())
            except ValueError:
                raise MalformedHeader(f"bad Content-Length: {value!r}") from None
            if length < 0:
                raise MalformedHeader("negative Content-Length")
    if length is None:
        raise MalformedHeader("missing Content-Length header")
    body = stream.read(length)
    if len(body) != length:
        raise MalformedHeader("stream ended inside the message body")
    return body


def parse_body(body: bytes) -> RpcMessage:
    try:
        obj = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedJson(str(exc)) from None
    return RpcMessage.from_json(obj)


def decode_message(stream: BinaryIO) -> Optional[RpcMessage]:
    """Consume exactly one frame and decode it; ``None`` on clean end of stream."""
    body = read_frame(stream)
    if body is None:
        return None
    return parse_body(body)


class IdCounter:
    """Per-connection request ids: 1, 2, 3, ..."""

    def __init__(self) -> None:
        self._counter = itertools.count(1)
        self._lock = threading.Lock()

    def next(self) -> int:
        with self._lock:
            return next(self._counter)


def next_request_id(counter: IdCounter) -> int:
    return counter.next()


class MessageWriter:
    """Serializes frames onto one output stream from any thread."""

    def __init__(self, stream: BinaryIO, on_write=None):
        self._stream = stream
        self._lock = threading.Lock()
        self._on_write = on_write

    def write(self, msg: RpcMessage) -> None:
        data = encode_message(msg)
        with self._lock:
            self._stream.write(data)
            self._stream.flush()
            if self._on_write is not None:
                self._on_write(msg)
