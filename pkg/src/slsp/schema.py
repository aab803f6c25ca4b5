"""Typed message schemas for SLSP and the LSP subset it relies on.

Every structure is a dataclass whose fields carry a ``kind`` describing
the JSON value expected on the wire.  ``from_json`` validates and raises
``RpcError(INVALID_PARAMS)`` naming the offending entry; unknown entries
are kept in ``extra`` and written back out by ``to_json``.
"""

from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass, field
from typing import Any, ClassVar, NamedTuple, Optional
from urllib.parse import unquote, urlparse

from .protocol import INVALID_PARAMS, RpcError


def _f(kind: Any, required: bool = True, default: Any = None):
    return field(default=default, metadata={"kind": kind, "required": required})


def _extra():
    return field(default_factory=dict, compare=True, metadata={"extra": True})


def invalid(message: str) -> RpcError:
    return RpcError(INVALID_PARAMS, message)


def is_file_uri(value: Any) -> bool:
    if not isinstance(value, str):
        return False
    parsed = urlparse(value)
    if parsed.scheme != "file" or not parsed.path.startswith("/"):
        return False
    try:
        unquote(parsed.path, errors="strict")
    except UnicodeDecodeError:
        return False
    return True


def _check_scalar(kind: str, value: Any) -> bool:
    if kind == "any":
        return True
    if kind == "str":
        return isinstance(value, str)
    if kind == "uri":
        return is_file_uri(value)
    if kind == "bool":
        return isinstance(value, bool)
    is_int = isinstance(value, int) and not isinstance(value, bool)
    if kind == "int":
        return is_int
    if kind == "nat":
        return is_int and value >= 0
    if kind == "posint":
        return is_int and value >= 1
    if kind == "id":
        return is_int or isinstance(value, str)
    if kind == "scalar":
        return isinstance(value, (str, int, bool))
    if kind == "object":
        return isinstance(value, dict)
    raise ValueError(f"unknown field kind {kind!r}")


_KIND_NAMES = {
    "str": "a string",
    "uri": "an absolute file URI",
    "bool": "a boolean",
    "int": "an integer",
    "nat": "a non-negative integer",
    "posint": "a positive integer",
    "id": "an integer or string",
    "scalar": "a string, integer or boolean",
    "object": "an object",
}


def _decode(kind: Any, value: Any, path: str) -> Any:
    if isinstance(kind, tuple) and kind[0] == "list":
        if not isinstance(value, list):
            raise invalid(f"'{path}' must be an array")
        return [_decode(kind[1], v, f"{path}[{i}]") for i, v in enumerate(value)]
    if isinstance(kind, type) and issubclass(kind, Schema):
        return kind.from_json(value, path)
    if isinstance(kind, type) and issubclass(kind, enum.IntEnum):
        try:
            return kind(value)
        except ValueError:
            raise invalid(f"'{path}' is not a valid {kind.__name__}") from None
    if not _check_scalar(kind, value):
        raise invalid(f"'{path}' must be {_KIND_NAMES[kind]}")
    return value


def _encode(value: Any) -> Any:
    if isinstance(value, Schema):
        return value.to_json()
    if isinstance(value, list):
        return [_encode(v) for v in value]
    if isinstance(value, enum.IntEnum):
        return int(value)
    return value


class Schema:
    """Mixin for dataclasses declared with ``_f`` fields."""

    # Fields emitted even when their value is None.
    NULLABLE: ClassVar[tuple] = ()

    @classmethod
    def from_json(cls, obj: Any, path: str = ""):
        if obj is None and not any(
            f.metadata.get("required") for f in dataclasses.fields(cls)
        ):
            obj = {}
        if not isinstance(obj, dict):
            raise invalid(f"'{path or 'params'}' must be an object")
        kwargs: dict = {}
        known = set()
        for f in dataclasses.fields(cls):
            if f.metadata.get("extra"):
                continue
            known.add(f.name)
            sub = f"{path}.{f.name}" if path else f.name
            if f.name not in obj or (obj[f.name] is None and f.name not in cls.NULLABLE):
                if f.metadata.get("required"):
                    raise invalid(f"'{sub}' is required")
                continue
            if obj[f.name] is None:
                kwargs[f.name] = None
                continue
            kwargs[f.name] = _decode(f.metadata["kind"], obj[f.name], sub)
        if "extra" in {f.name for f in dataclasses.fields(cls)}:
            kwargs["extra"] = {k: v for k, v in obj.items() if k not in known}
        out = cls(**kwargs)
        out.validate(path)
        return out

    def validate(self, path: str) -> None:
        pass

    def to_json(self) -> dict:
        out: dict = {}
        for f in dataclasses.fields(self):
            if f.metadata.get("extra"):
                continue
            value = getattr(self, f.name)
            if value is None and f.name not in self.NULLABLE:
                continue
            out[f.name] = _encode(value)
        out.update(getattr(self, "extra", {}) or {})
        return out


# -- language-neutral data types ------------------------------------------------


@dataclass
class Position(Schema):
    line: int = _f("nat")
    character: int = _f("nat")


@dataclass
class Range(Schema):
    start: Position = _f(Position)
    end: Position = _f(Position)

    def validate(self, path: str) -> None:
        if (self.start.line, self.start.character) > (self.end.line, self.end.character):
            raise invalid(f"'{path or 'range'}' ends before it starts")

    @classmethod
    def from_span(cls, span) -> "Range":
        return cls(Position(span.start.line, span.start.character),
                   Position(span.end.line, span.end.character))


@dataclass
class Location(Schema):
    uri: str = _f("uri")
    range: Range = _f(Range)


@dataclass
class Diagnostic(Schema):
    range: Range = _f(Range)
    message: str = _f("str")
    severity: Optional[int] = _f("int", required=False)
    source: Optional[str] = _f("str", required=False)


# -- proof obligations ----------------------------------------------------------


@dataclass
class ProofObligation(Schema):
    id: int = _f("posint")
    kind: str = _f("str")
    name: str = _f("str")
    location: Location = _f(Location)
    source: str = _f("str")
    proved: Optional[bool] = _f("bool", required=False)


# -- combinatorial testing -------------------------------------------------------


class Verdict(enum.IntEnum):
    PASSED = 1
    FAILED = 2
    INCONCLUSIVE = 3
    FILTERED = 4


@dataclass
class CTTrace(Schema):
    name: str = _f("str")
    location: Location = _f(Location)
    verdict: Optional[Verdict] = _f(Verdict, required=False)


@dataclass
class CTSymbol(Schema):
    name: str = _f("str")
    traces: list = _f(("list", CTTrace))


@dataclass
class CTCallResult(Schema):
    NULLABLE = ("result",)
    case: str = _f("str")
    result: Optional[str] = _f("str", required=False)


@dataclass
class CTTestCase(Schema):
    id: int = _f("posint")
    sequence: list = _f(("list", CTCallResult))
    verdict: Optional[Verdict] = _f(Verdict, required=False)


@dataclass
class CTFilterOption(Schema):
    key: str = _f("str")
    value: Any = _f("scalar")


@dataclass
class NumberRange(Schema):
    start: Optional[int] = _f("posint", required=False)
    end: Optional[int] = _f("posint", required=False)

    def validate(self, path: str) -> None:
        if self.start is not None and self.end is not None and self.end < self.start:
            raise invalid(f"'{path or 'range'}' end precedes start")


# -- theorem proving ---------------------------------------------------------------


@dataclass
class Lemma(Schema):
    name: str = _f("str")
    theory: str = _f("str")
    location: Location = _f(Location)
    kind: str = _f("str")
    status: str = _f("str")


@dataclass
class ProofState(Schema):
    id: int = _f("nat")
    status: str = _f("str")
    subgoals: list = _f(("list", "str"))
    rules: list = _f(("list", "str"))


@dataclass
class TPProveResponse(Schema):
    status: str = _f("str")
    processingTime: int = _f("nat")
    suggestedCommands: Optional[list] = _f(("list", "str"), required=False)
    description: Optional[str] = _f("str", required=False)


@dataclass
class TPCommand(Schema):
    name: str = _f("str")
    description: str = _f("str")


@dataclass
class TPCommandResponse(Schema):
    description: str = _f("str")
    state: ProofState = _f(ProofState)


# -- capabilities --------------------------------------------------------------------


@dataclass
class TranslateProvider(Schema):
    languageId: list = _f(("list", "str"))


@dataclass
class SlspCapabilities(Schema):
    proofObligationProvider: bool = _f("bool", required=False, default=False)
    combinatorialTestProvider: bool = _f("bool", required=False, default=False)
    translateProvider: Optional[TranslateProvider] = _f(TranslateProvider, required=False)
    theoremProvingProvider: bool = _f("bool", required=False, default=False)

    def features(self) -> set:
        out = set()
        if self.proofObligationProvider:
            out.add("POG")
        if self.combinatorialTestProvider:
            out.add("CT")
        if self.translateProvider is not None and self.translateProvider.languageId:
            out.add("TR")
        if self.theoremProvingProvider:
            out.add("TP")
        return out

    @classmethod
    def from_initialize_result(cls, result: Any) -> "SlspCapabilities":
        try:
            raw = result["capabilities"]["experimental"]["slsp"]
        except (KeyError, TypeError):
            return cls()
        return cls.from_json(raw, "capabilities.experimental.slsp")


# -- method parameters ------------------------------------------------------------------


@dataclass
class POGGenerateParams(Schema):
    uri: str = _f("uri")
    extra: dict = _extra()


@dataclass
class POGUpdatedParams(Schema):
    successful: bool = _f("bool")
    extra: dict = _extra()


@dataclass
class CTTracesParams(Schema):
    uri: Optional[str] = _f("uri", required=False)
    extra: dict = _extra()


@dataclass
class CTGenerateParams(Schema):
    name: str = _f("str")
    extra: dict = _extra()


@dataclass
class CTExecuteParams(Schema):
    name: str = _f("str")
    filter: Optional[list] = _f(("list", CTFilterOption), required=False)
    range: Optional[NumberRange] = _f(NumberRange, required=False)
    partialResultToken: Any = _f("id", required=False)
    workDoneToken: Any = _f("id", required=False)
    extra: dict = _extra()


@dataclass
class TRTranslateParams(Schema):
    languageId: str = _f("str")
    saveUri: str = _f("uri")
    uri: Optional[str] = _f("uri", required=False)
    extra: dict = _extra()


@dataclass
class TPLemmasParams(Schema):
    projectUri: Optional[str] = _f("uri", required=False)
    extra: dict = _extra()


@dataclass
class TPBeginProofParams(Schema):
    name: str = _f("str")
    extra: dict = _extra()


@dataclass
class TPProveParams(Schema):
    name: Optional[str] = _f("str", required=False)
    extra: dict = _extra()


@dataclass
class TPGetCommandsParams(Schema):
    extra: dict = _extra()


@dataclass
class TPCommandParams(Schema):
    command: str = _f("str")
    extra: dict = _extra()


@dataclass
class TPUndoParams(Schema):
    id: Optional[int] = _f("int", required=False)
    extra: dict = _extra()


# LSP subset.


@dataclass
class InitializeParams(Schema):
    NULLABLE = ("rootUri", "processId")
    capabilities: dict = _f("object")
    rootUri: Optional[str] = _f("uri", required=False)
    processId: Optional[int] = _f("int", required=False)
    extra: dict = _extra()


@dataclass
class EmptyParams(Schema):
    extra: dict = _extra()


@dataclass
class TextDocumentItem(Schema):
    uri: str = _f("uri")
    languageId: str = _f("str")
    version: int = _f("int")
    text: str = _f("str")


@dataclass
class TextDocumentIdentifier(Schema):
    uri: str = _f("uri")
    version: Optional[int] = _f("int", required=False)


@dataclass
class ContentChange(Schema):
    text: str = _f("str")
    extra: dict = _extra()


@dataclass
class DidOpenParams(Schema):
    textDocument: TextDocumentItem = _f(TextDocumentItem)
    extra: dict = _extra()


@dataclass
class DidChangeParams(Schema):
    textDocument: TextDocumentIdentifier = _f(TextDocumentIdentifier)
    contentChanges: list = _f(("list", ContentChange))
    extra: dict = _extra()

    def validate(self, path: str) -> None:
        if not self.contentChanges:
            raise invalid("'contentChanges' must not be empty")


@dataclass
class DidCloseParams(Schema):
    textDocument: TextDocumentIdentifier = _f(TextDocumentIdentifier)
    extra: dict = _extra()


@dataclass
class CancelParams(Schema):
    id: Any = _f("id")
    extra: dict = _extra()


@dataclass
class ProgressParams(Schema):
    token: Any = _f("id")
    value: Any = _f("any")
    extra: dict = _extra()


@dataclass
class PublishDiagnosticsParams(Schema):
    uri: str = _f("uri")
    diagnostics: list = _f(("list", Diagnostic))
    version: Optional[int] = _f("int", required=False)
    extra: dict = _extra()


# -- method table -------------------------------------------------------------------------


class MethodInfo(NamedTuple):
    name: str
    kind: str  # "request" | "notification"
    direction: str  # "client->server" | "server->client" | "both"
    params: Optional[type]
    result: Optional[str]
    feature: Optional[str]  # "POG" | "CT" | "TR" | "TP" for SLSP methods


REQUEST = "request"
NOTIFICATION = "notification"
C2S = "client->server"
S2C = "server->client"
BOTH = "both"

SLSP_METHODS = (
    MethodInfo("slsp/POG/generate", REQUEST, C2S, POGGenerateParams, "ProofObligation[]", "POG"),
    MethodInfo("slsp/POG/updated", NOTIFICATION, S2C, POGUpdatedParams, None, "POG"),
    MethodInfo("slsp/CT/traces", REQUEST, C2S, CTTracesParams, "CTSymbol[]", "CT"),
    MethodInfo("slsp/CT/generate", REQUEST, C2S, CTGenerateParams, "{numberOfTests: number}", "CT"),
    MethodInfo("slsp/CT/execute", REQUEST, C2S, CTExecuteParams, "CTTestCase[]", "CT"),
    MethodInfo("slsp/TR/translate", REQUEST, C2S, TRTranslateParams, "{uri: DocumentUri}", "TR"),
    MethodInfo("slsp/TP/lemmas", REQUEST, C2S, TPLemmasParams, "Lemma[]", "TP"),
    MethodInfo("slsp/TP/beginProof", REQUEST, C2S, TPBeginProofParams, "ProofState", "TP"),
    MethodInfo("slsp/TP/prove", REQUEST, C2S, TPProveParams, "TPProveResponse", "TP"),
    MethodInfo("slsp/TP/getCommands", REQUEST, C2S, TPGetCommandsParams, "TPCommand[]", "TP"),
    MethodInfo("slsp/TP/command", REQUEST, C2S, TPCommandParams, "TPCommandResponse", "TP"),
    MethodInfo("slsp/TP/undo", REQUEST, C2S, TPUndoParams, "ProofState", "TP"),
)

LSP_METHODS = (
    MethodInfo("initialize", REQUEST, C2S, InitializeParams, "InitializeResult", None),
    MethodInfo("initialized", NOTIFICATION, C2S, EmptyParams, None, None),
    MethodInfo("shutdown", REQUEST, C2S, None, "null", None),
    MethodInfo("exit", NOTIFICATION, C2S, None, None, None),
    MethodInfo("textDocument/didOpen", NOTIFICATION, C2S, DidOpenParams, None, None),
    MethodInfo("textDocument/didChange", NOTIFICATION, C2S, DidChangeParams, None, None),
    MethodInfo("textDocument/didClose", NOTIFICATION, C2S, DidCloseParams, None, None),
    MethodInfo("textDocument/publishDiagnostics", NOTIFICATION, S2C, PublishDiagnosticsParams, None, None),
    MethodInfo("$/cancelRequest", NOTIFICATION, BOTH, CancelParams, None, None),
    MethodInfo("$/progress", NOTIFICATION, BOTH, ProgressParams, None, None),
)

_TABLE = {m.name: m for m in SLSP_METHODS + LSP_METHODS}


def method_table() -> list:
    return list(SLSP_METHODS + LSP_METHODS)


def lookup(method: str) -> Optional[MethodInfo]:
    return _TABLE.get(method)


def validate_params(method: str, params: Any):
    """Decode ``params`` for ``method``; raises ``RpcError`` (-32602) on bad input."""
    info = _TABLE.get(method)
    if info is None:
        raise ValueError(f"unknown method {method!r}")
    if info.params is None:
        return None
    return info.params.from_json(params)
