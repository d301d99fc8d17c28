"""Tokenizer for the .amw modeling language."""

from __future__ import annotations

import re
from dataclasses import dataclass

from .diagnostics import diag
from .model import Pos

# Words that can never be used as identifiers.
RESERVED = frozenset(
    """true false and or implies not var return if else call expect assert
    class extends attr method published abstract anchor object""".split()
)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\f]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<int>[0-9]+)
  | (?P<str>")
  | (?P<sym>->|<=|>=|<>|[{}()\[\];:,.<>=+\-*/@|])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # ID, INT, STR, SYM, EOF
    text: str
    line: int
    column: int
    value: object = None

    @property
    def pos(self):
        return Pos(self.line, self.column)

    def is_sym(self, s: str) -> bool:
        return self.kind == "SYM" and self.text == s

    def is_word(self, w: str) -> bool:
        return self.kind == "ID" and self.text == w


def tokenize(text: str, path=None):
    """Return ``(tokens, diagnostics)``; lexing continues past bad characters."""
    tokens, diagnostics = [], []
    i, line, line_start = 0, 1, 0
    n = len(text)
    while i < n:
        col = i - line_start + 1
        m = _TOKEN_RE.match(text, i)
        if m is None:
            diagnostics.append(diag("E_SYNTAX", f"unexpected character {text[i]!r}", (line, col), path))
            i += 1
            continue
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "id":
            tokens.append(Token("ID", m.group(), line, col))
        elif kind == "int":
            tokens.append(Token("INT", m.group(), line, col, int(m.group())))
        elif kind == "sym":
            tokens.append(Token("SYM", m.group(), line, col))
        elif kind == "str":
            j, chars = i + 1, []
            while j < n and text[j] not in '"\n':
                if text[j] == "\\":
                    if j + 1 < n and text[j + 1] in '"\\':
                        chars.append(text[j + 1])
                        j += 2
                        continue
                    diagnostics.append(diag("E_SYNTAX", "invalid escape in string literal",
                                            (line, j - line_start + 1), path))
                    j += 1
                    continue
                chars.append(text[j])
                j += 1
            if j >= n or text[j] != '"':
                diagnostics.append(diag("E_SYNTAX", "unterminated string literal", (line, col), path))
                i = j
                continue
            tokens.append(Token("STR", text[i:j + 1], line, col, "".join(chars)))
            i = j + 1
            continue
        i = m.end()
    tokens.append(Token("EOF", "", line, i - line_start + 1))
    return tokens, diagnostics
