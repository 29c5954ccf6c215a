"""Tokenizer for the Bluespec subset."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from bluec.diagnostics import LexError, Location

KEYWORDS = frozenset(
    {
        "module", "endmodule", "interface", "endinterface", "method", "endmethod",
        "rule", "endrule", "let", "if", "else", "while", "for", "case", "endcase",
        "default", "begin", "end", "return", "action", "endaction", "seq", "endseq",
        "par", "endpar", "repeat", "break", "continue", "True", "False", "type",
        "matches",
    }
)

# Longest first so that `<=` wins over `<`.
OPERATORS = (
    "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "<-",
    "+", "-", "*", "/", "%", "&", "|", "^", "~", "!", "<", ">", "=", "?", ":", ".",
)
PUNCTUATION = "();,#[]{}"

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_$]*")
_SYSTEM_IDENT = re.compile(r"\$[A-Za-z_][A-Za-z0-9_]*")
_DECIMAL = re.compile(r"[0-9]+")
_HEX = re.compile(r"'h([0-9A-Fa-f]+)")


@dataclass(frozen=True)
class Token:
    kind: str  # ident | keyword | int | string | op | attr_open | attr_close | punct | eof
    text: str
    loc: Location = field(compare=False)
    value: object = None

    def __repr__(self) -> str:
        return f"Token({self.kind}, {self.text!r})"


def tokenize(source: str, file: str = "<input>") -> list[Token]:
    """Split `source` into tokens, dropping whitespace and comments.

    The returned list does not include the end-of-file marker; the parser
    appends its own.
    """
    tokens: list[Token] = []
    pos = 0
    line = 1
    line_start = 0
    in_attribute = False
    n = len(source)

    def here(at: int) -> Location:
        return Location(file, line, at - line_start + 1)

    while pos < n:
        ch = source[pos]
        if ch == "\n":
            line += 1
            line_start = pos + 1
            pos += 1
            continue
        if ch in " \t\r\f":
            pos += 1
            continue
        if source.startswith("//", pos):
            end = source.find("\n", pos)
            pos = n if end < 0 else end
            continue
        if source.startswith("/*", pos):
            end = source.find("*/", pos + 2)
            if end < 0:
                raise LexError("unterminated block comment", here(pos))
            chunk = source[pos:end + 2]
            newlines = chunk.count("\n")
            if newlines:
                line += newlines
                line_start = pos + chunk.rfind("\n") + 1
            pos = end + 2
            continue

        loc = here(pos)
        if source.startswith("(*", pos) and not in_attribute:
            tokens.append(Token("attr_open", "(*", loc))
            in_attribute = True
            pos += 2
            continue
        if source.startswith("*)", pos) and in_attribute:
            tokens.append(Token("attr_close", "*)", loc))
            in_attribute = False
            pos += 2
            continue
        if ch == '"':
            end = pos + 1
            while end < n and source[end] != '"':
                if source[end] == "\n":
                    break
                end += 2 if source[end] == "\\" else 1
            if end >= n or source[end] != '"':
                raise LexError("unterminated string literal", loc)
            text = source[pos:end + 1]
            tokens.append(Token("string", text, loc, _unescape(text[1:-1])))
            pos = end + 1
            continue
        m = _HEX.match(source, pos)
        if m:
            tokens.append(Token("int", m.group(0), loc, int(m.group(1), 16)))
            pos = m.end()
            continue
        m = _DECIMAL.match(source, pos)
        if m:
            if pos + len(m.group(0)) < n and source[m.end()] == "'":
                raise LexError("sized literals are not in the accepted subset", loc)
            tokens.append(Token("int", m.group(0), loc, int(m.group(0))))
            pos = m.end()
            continue
        m = _IDENT.match(source, pos) or _SYSTEM_IDENT.match(source, pos)
        if m:
            text = m.group(0)
            kind = "keyword" if text in KEYWORDS else "ident"
            tokens.append(Token(kind, text, loc))
            pos = m.end()
            continue
        for op in OPERATORS:
            if source.startswith(op, pos):
                tokens.append(Token("op", op, loc))
                pos += len(op)
                break
        else:
            if ch in PUNCTUATION:
                tokens.append(Token("punct", ch, loc))
                pos += 1
            else:
                raise LexError(f"illegal character {ch!r}", loc)
    if in_attribute:
        raise LexError("unterminated attribute block", here(pos))
    return tokens


def _unescape(body: str) -> str:
    out = []
    i = 0
    while i < len(body):
        c = body[i]
        if c == "\\" and i + 1 < len(body):
            nxt = body[i + 1]
            out.append({"n": "\n", "t": "\t", '"': '"', "\\": "\\"}.get(nxt, nxt))
            i += 2
        else:
            out.append(c)
            i += 1
    return "".join(out)
