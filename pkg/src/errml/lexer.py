"""Tokenizer for ``.errml`` sources."""

from __future__ import annotations

import re
from dataclasses import dataclass

from .diagnostics import Diagnostic, SourceSpan, error

IDENT = "IDENT"
NUMBER = "NUMBER"
PUNCT = "PUNCT"
EOF = "EOF"

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<nl>\n)
  | (?P<comment>--[^\n]*)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[^\W\d]\w*)
  | (?P<punct>\{\*\*|\*\*\}|=>|->|[{}()\[\]:;.,=\-])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    span: SourceSpan

    def is_kw(self, *words: str) -> bool:
        return self.kind == IDENT and self.text.lower() in words

    def is_punct(self, *symbols: str) -> bool:
        return self.kind == PUNCT and self.text in symbols

    def describe(self) -> str:
        if self.kind == EOF:
            return "end of input"
        return repr(self.text)


def tokenize(text: str, file: str = "<input>") -> tuple[list[Token], list[Diagnostic]]:
    tokens: list[Token] = []
    diags: list[Diagnostic] = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            span = SourceSpan(file, line, pos - line_start + 1, 1)
            diags.append(error(f"unexpected character {text[pos]!r}", span, "Syntax"))
            pos += 1
            continue
        kind = m.lastgroup
        span = SourceSpan(file, line, pos - line_start + 1, m.end() - pos)
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "number":
            tokens.append(Token(NUMBER, m.group(), span))
        elif kind == "ident":
            tokens.append(Token(IDENT, m.group(), span))
        elif kind == "punct":
            tokens.append(Token(PUNCT, m.group(), span))
        pos = m.end()
    tokens.append(Token(EOF, "", SourceSpan(file, line, pos - line_start + 1, 0)))
    return tokens, diags
