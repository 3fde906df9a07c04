"""Source locations, diagnostics and the exception hierarchy."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class Severity(str, Enum):
    ERROR = "error"
    WARNING = "warning"
    INFO = "info"


@dataclass(frozen=True)
class SourceSpan:
    file: str = "<input>"
    line: int = 1
    column: int = 1
    length: int = 0

    def __post_init__(self) -> None:
        if self.line < 1 or self.column < 1:
            raise ValueError(f"invalid span {self.line}:{self.column}")

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


NO_SPAN = SourceSpan()


@dataclass(frozen=True)
class Diagnostic:
    severity: Severity
    message: str
    span: SourceSpan = NO_SPAN
    code: str = ""

    @property
    def is_error(self) -> bool:
        return self.severity is Severity.ERROR

    def __str__(self) -> str:
        code = f" [{self.code}]" if self.code else ""
        where = "errml" if self.span == NO_SPAN else str(self.span)
        return f"{where}: {self.severity.value}{code}: {self.message}"

    def to_dict(self) -> dict:
        return {
            "severity": self.severity.value,
            "code": self.code,
            "message": self.message,
            "file": self.span.file,
            "line": self.span.line,
            "column": self.span.column,
            "length": self.span.length,
        }


def error(message: str, span: SourceSpan = NO_SPAN, code: str = "") -> Diagnostic:
    return Diagnostic(Severity.ERROR, message, span, code)


def warning(message: str, span: SourceSpan = NO_SPAN, code: str = "") -> Diagnostic:
    return Diagnostic(Severity.WARNING, message, span, code)


def info(message: str, span: SourceSpan = NO_SPAN, code: str = "") -> Diagnostic:
    return Diagnostic(Severity.INFO, message, span, code)


def has_errors(diagnostics) -> bool:
    return any(d.is_error for d in diagnostics)


class ErrmlError(Exception):
    """Base class for every failure raised by the pipeline.

    Carries a :class:`Diagnostic` so the CLI can report it uniformly.
    """

    code = "error"

    def __init__(self, message: str, span: SourceSpan = NO_SPAN):
        super().__init__(message)
        self.diagnostic = error(message, span, self.code)


# model-core
class RemoveWithoutAdd(ErrmlError):
    code = "RemoveWithoutAdd"


class ForwardReference(ErrmlError):
    code = "ForwardReference"


class UnknownErrorModel(ErrmlError):
    code = "UnknownErrorModel"


class GuardAtomUnresolvable(ErrmlError):
    code = "GuardAtomUnresolvable"


class DerivedAtomUnresolvable(ErrmlError):
    code = "DerivedAtomUnresolvable"


class NoErrorModels(ErrmlError):
    code = "NoErrorModels"


class InvalidModel(ErrmlError):
    code = "InvalidModel"


# composer
class UnboundParameter(ErrmlError):
    code = "UnboundParameter"


class StateLimitExceeded(ErrmlError):
    code = "StateLimitExceeded"


class CascadeDepthExceeded(ErrmlError):
    code = "CascadeDepthExceeded"


class GuardLivelock(ErrmlError):
    code = "GuardLivelock"


# analyzer
class NotIrreducible(ErrmlError):
    code = "NotIrreducible"


class NoConvergence(ErrmlError):
    code = "NoConvergence"


class LabelMissing(ErrmlError):
    code = "LabelMissing"


class SizeLimit(ErrmlError):
    code = "SizeLimit"


# export / import
class FormatError(ErrmlError):
    code = "FormatError"


class FileAccessError(ErrmlError):
    code = "FileAccessError"
