from __future__ import annotations

from dataclasses import dataclass

from ..syntax import Span


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    message: str
    line: int
    column: int
    length: int = 1

    @classmethod
    def at(cls, span: Span | None, message: str, severity: str = "error") -> "Diagnostic":
        if span is None:
            return cls(severity, message, 1, 1, 1)
        return cls(severity, message, span.line, span.column, max(1, span.length))

    def render(self, path: str = "<input>") -> str:
        return f"{path}:{self.line}:{self.column}: {self.severity}: {self.message}"

    def to_json(self) -> dict:
        return {
            "severity": self.severity,
            "message": self.message,
            "line": self.line,
            "column": self.column,
            "length": self.length,
        }


class ParseError(Exception):
    """Raised by every frontend entry point; carries one or more diagnostics."""

    def __init__(self, diagnostics: list[Diagnostic]):
        if not diagnostics:
            raise ValueError("ParseError needs at least one diagnostic")
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(d.render() for d in self.diagnostics))
