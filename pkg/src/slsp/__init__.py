"""Specification Language Server Protocol: SDK, MiniSpec reference server and conformance client."""

__version__ = "0.1.0"
