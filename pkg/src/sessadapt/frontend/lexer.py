from __future__ import annotations

import re
from dataclasses import dataclass

from ..syntax import Span
from .diagnostics import Diagnostic, ParseError

KEYWORDS = frozenset(
    """
    protocol global role rec end wait disconnect disconnects pid import type actor
    follows ty boot let in try catch loop return continue raise new self replace
    with stop discover connect to as accept from send receive true false
    """.split()
)

# Longest operators first so the alternation is greedy.
_OPERATORS = ["->>", "->", "!!", "??", "!", "?", "(", ")", "{", "}", ".", "+", ":", ";", ",", "=", "|"]

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<int>-?\d+)
  | (?P<str>"(?:[^"\\\n]|\\.)*")
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>"""
    + "|".join(re.escape(op) for op in _OPERATORS)
    + r""")
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # "ident", "kw", "int", "str", "op", "eof"
    text: str
    span: Span

    def is_(self, kind: str, text: str | None = None) -> bool:
        return self.kind == kind and (text is None or self.text == text)


def _unescape(body: str) -> str:
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\" and i + 1 < len(body):
            nxt = body[i + 1]
            out.append({"n": "\n", "t": "\t"}.get(nxt, nxt))
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise ParseError([Diagnostic("error", f"unexpected character {text[pos]!r}", line, col, 1)])
        kind = m.lastgroup
        lexeme = m.group()
        span = Span(line, col, len(lexeme))
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "ident":
            tokens.append(Token("kw" if lexeme in KEYWORDS else "ident", lexeme, span))
        elif kind == "str":
            tokens.append(Token("str", _unescape(lexeme[1:-1]), span))
        elif kind in ("int", "op"):
            tokens.append(Token(kind, lexeme, span))
        pos = m.end()
    tokens.append(Token("eof", "", Span(line, pos - line_start + 1, 1)))
    return tokens


def quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t") + '"'
