"""Project model: on-disk ``.ms`` files plus in-memory overlays of open buffers."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional
from urllib.parse import unquote, urlparse

from .minispec import ast as A
from .minispec.checker import typecheck
from .minispec.parser import Diagnostic, parse

log = logging.getLogger(__name__)

EXTENSION = ".ms"


def uri_to_path(uri: str) -> Path:
    return Path(unquote(urlparse(uri).path))


def path_to_uri(path: Path) -> str:
    return Path(path).absolute().as_uri()


def normalize_uri(uri: str) -> str:
    return path_to_uri(uri_to_path(uri))


@dataclass(frozen=True)
class SourceFile:
    uri: str
    text: str
    module: Optional[A.Module]
    diagnostics: tuple

    @property
    def ok(self) -> bool:
        return self.module is not None and not self.diagnostics


def analyze(uri: str, text: str) -> SourceFile:
    module, diags = parse(text, uri)
    if module is not None:
        diags = typecheck(module)
    return SourceFile(uri, text, module, tuple(diags))


class Workspace:
    """Owns document state.  Not thread-safe; the server handler owns it."""

    def __init__(self, root_uri: Optional[str] = None):
        self.root: Optional[Path] = uri_to_path(root_uri) if root_uri else None
        self.overlay: dict = {}
        self.disk_files: set = set()
        self.version = 0
        self.files: dict = {}
        self._cache: dict = {}
        self.scan()

    @property
    def root_uri(self) -> Optional[str]:
        return path_to_uri(self.root) if self.root else None

    def scan(self) -> None:
        self.disk_files = set()
        if self.root is not None and self.root.is_dir():
            for p in self.root.rglob(f"*{EXTENSION}"):
                if p.is_file():
                    self.disk_files.add(path_to_uri(p))
        self.rebuild()

    def contains(self, uri: str) -> bool:
        if self.root is None:
            return False
        path = uri_to_path(uri)
        return path == self.root or self.root in path.parents

    def effective_text(self, uri: str) -> Optional[str]:
        uri = normalize_uri(uri)
        if uri in self.overlay:
            return self.overlay[uri]
        try:
            return uri_to_path(uri).read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError):
            return None

    def _member(self, uri: str) -> bool:
        return uri.endswith(EXTENSION) and self.contains(uri)

    def rebuild(self) -> None:
        members = set(self.disk_files)
        members.update(u for u in self.overlay if self._member(u))
        files = {}
        for uri in sorted(members):
            text = self.effective_text(uri)
            if text is None:
                continue
            key = (uri, text)
            if key not in self._cache:
                self._cache[key] = analyze(uri, text)
            files[uri] = self._cache[key]
        self._cache = {(f.uri, f.text): f for f in files.values()}
        self.files = _flag_duplicate_modules(files)

    def _changed(self) -> None:
        self.version += 1
        self.rebuild()

    def open(self, uri: str, text: str) -> None:
        self.overlay[normalize_uri(uri)] = text
        self._changed()

    def change(self, uri: str, text: str) -> None:
        self.overlay[normalize_uri(uri)] = text
        self._changed()

    def close(self, uri: str) -> None:
        self.overlay.pop(normalize_uri(uri), None)
        self._changed()

    def diagnostics_for(self, uri: str) -> list:
        uri = normalize_uri(uri)
        if uri in self.files:
            return list(self.files[uri].diagnostics)
        text = self.effective_text(uri)
        if text is None:
            return []
        return list(analyze(uri, text).diagnostics)

    @property
    def ok(self) -> bool:
        return all(f.ok for f in self.files.values())

    def errors(self) -> list:
        return [(f.uri, d) for f in self.files.values() for d in f.diagnostics]

    def files_under(self, uri: Optional[str] = None) -> list:
        """Project files inside ``uri`` (file or folder), in lexicographic order."""
        if uri is None:
            return [self.files[u] for u in sorted(self.files)]
        target = uri_to_path(uri)
        out = []
        for u in sorted(self.files):
            p = uri_to_path(u)
            if p == target or target in p.parents:
                out.append(self.files[u])
        return out

    def modules(self) -> list:
        """``(SourceFile, Module)`` pairs for every file that parsed."""
        return [(f, f.module) for f in self.files_under() if f.module is not None]


def _flag_duplicate_modules(files: dict) -> dict:
    owners: dict = {}
    for uri in sorted(files):
        m = files[uri].module
        if m is not None:
            owners.setdefault(m.name, []).append(uri)
    out = dict(files)
    for name, uris in owners.items():
        for uri in uris[1:]:
            f = out[uri]
            diag = Diagnostic(f.module.span, f"module '{name}' is already defined in {uris[0]}")
            out[uri] = SourceFile(f.uri, f.text, f.module, f.diagnostics + (diag,))
    return out
