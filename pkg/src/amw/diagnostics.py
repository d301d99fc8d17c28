"""Diagnostics and the exception types shared across the workbench."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    line: int = 0
    column: int = 0
    severity: str = "error"
    path: Optional[str] = None

    def render(self) -> str:
        where = f"{self.path or '<model>'}:{self.line}:{self.column}"
        return f"{where}: {self.severity} {self.code}: {self.message}"


def diag(code: str, message: str, pos=None, path=None, severity="error") -> Diagnostic:
    line, column = pos if pos is not None else (0, 0)
    return Diagnostic(code, message, line, column, severity, path)


class AmwError(Exception):
    """Base class for errors carrying a diagnostic code."""

    def __init__(self, code: str, message: str = ""):
        super().__init__(f"{code}: {message}" if message else code)
        self.code = code
        self.message = message


class ParseError(AmwError):
    def __init__(self, diagnostics: list):
        self.diagnostics = list(diagnostics)
        first = self.diagnostics[0] if self.diagnostics else None
        super().__init__("E_SYNTAX", first.render() if first else "syntax error")


class ModelError(AmwError):
    """Raised by model queries such as ``lookup_member``."""


class TypeCheckError(AmwError):
    def __init__(self, message: str, pos=None, code: str = "E_TYPE"):
        super().__init__(code, message)
        self.pos = pos
