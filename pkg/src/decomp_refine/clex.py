"""Lexical scanner for C-like text.

Not a parser. It splits source into identifiers, numeric literals, string and
character literals, operators and punctuation. It is used for source BLEU,
length limits and pattern detection, so it has to be deterministic and
tolerant of malformed input (decompiler pseudo-code, truncated model output).
"""

from __future__ import annotations

import re

# Longest operators first so the alternation is greedy in the right order.
_OPERATORS = [
    "<<=", ">>=", "...", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=",
    "&&", "||", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "##",
]

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<line_comment>//[^\n]*)
  | (?P<block_comment>/\*.*?(?:\*/|\Z))
  | (?P<string>(?:u8|[LuU])?"(?:\\.|[^"\\\n])*"?)
  | (?P<char>[LuU]?'(?:\\(?:x[0-9a-fA-F]+|[0-7]{1,3}|.)|[^'\\\n])')
  | (?P<number>(?:0[xX][0-9a-fA-F]+|\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)[uUlLfF]*)
  | (?P<ident>[A-Za-z_]\w*)
  | (?P<op>"""
    + "|".join(re.escape(op) for op in _OPERATORS)
    + r""")
  | (?P<punct>.)
    """,
    re.VERBOSE | re.DOTALL,
)


class Token(str):
    """A token string that remembers its lexical kind."""

    kind: str

    def __new__(cls, text: str, kind: str) -> "Token":
        tok = super().__new__(cls, text)
        tok.kind = kind
        return tok


def scan(text: str, keep_comments: bool = False) -> list[Token]:
    out: list[Token] = []
    for m in _TOKEN_RE.finditer(text):
        kind = m.lastgroup
        if kind == "ws":
            continue
        if kind in ("line_comment", "block_comment"):
            if keep_comments:
                out.append(Token(m.group(), "comment"))
            continue
        out.append(Token(m.group(), kind))
    return out


def tokenize(text: str) -> list[str]:
    """Comment-free lexical tokens of *text* as plain strings."""
    return [str(t) for t in scan(text)]


def count_tokens(text: str, include_comments: bool = False) -> int:
    """Number of lexical tokens.

    With *include_comments*, a comment counts as its two delimiters plus the
    tokens of its body, so prose inside ``/* ... */`` is measured too.
    """
    if not include_comments:
        return len(scan(text))
    total = 0
    for tok in scan(text, keep_comments=True):
        if tok.kind == "comment":
            body = tok[2:-2] if tok.startswith("/*") else tok[2:]
            total += 2 + len(scan(body))
        else:
            total += 1
    return total


def strip_comments_and_strings(text: str) -> str:
    """Blank out comments and replace literal contents with empty literals.

    Line structure is kept so callers can still reason about positions.
    """

    def repl(m: re.Match) -> str:
        kind = m.lastgroup
        s = m.group()
        if kind == "line_comment":
            return " "
        if kind == "block_comment":
            return " " + "\n" * s.count("\n")
        if kind == "string":
            return '""'
        if kind == "char":
            return "''"
        return s

    return _TOKEN_RE.sub(repl, text)
