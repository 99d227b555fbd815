"""Indentation-sensitive lexer.

Indentation must use spaces only; a tab anywhere in the file is rejected.
Any consistent indent width is accepted, tracked with the usual indent stack:
each deeper level pushes, and a dedent must land exactly on an enclosing
level.  Newlines inside parentheses or brackets are ignored (implicit line
joining), and ``#`` starts a comment running to end of line.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import MslIndentationError, MslSyntaxError
from .spans import SourceSpan

TWO_CHAR_OPS = ("==", "!=", "<=", ">=", "+=", "-=", "*=", "/=")
ONE_CHAR_OPS = "()[],:.=<>+-*/%"


@dataclass(frozen=True)
class Token:
    kind: str  # name | int | float | string | op | newline | indent | dedent | eof
    value: str
    line: int
    col: int
    end_line: int
    end_col: int

    def span(self, file: str) -> SourceSpan:
        return SourceSpan(file, self.line, self.col, self.end_line, self.end_col)


def tokenize(source: str, file: str = "<input>") -> list[Token]:
    return _Lexer(source, file).run()


class _Lexer:
    def __init__(self, source: str, file: str):
        self.source = source
        self.file = file
        self.tokens: list[Token] = []
        self.indents = [0]
        self.depth = 0  # bracket nesting

    def error(self, message, line, col, cls=MslSyntaxError):
        raise cls(message, SourceSpan(self.file, line, col, line, col))

    def run(self) -> list[Token]:
        lines = self.source.split("\n")
        for lineno, text in enumerate(lines, start=1):
            self.lex_line(lineno, text)
        last = len(lines)
        end_col = max(1, len(lines[-1]) + 1)
        while len(self.indents) > 1:
            self.indents.pop()
            self.tokens.append(Token("dedent", "", last, end_col, last, end_col))
        self.tokens.append(Token("eof", "", last, end_col, last, end_col))
        return self.tokens

    def lex_line(self, lineno: int, text: str):
        if "\t" in text:
            col = text.index("\t") + 1
            self.error("tab character is not allowed", lineno, col,
                       MslIndentationError)
        pos = 0
        while pos < len(text) and text[pos] == " ":
            pos += 1
        rest = text[pos:]
        if self.depth == 0:
            if not rest or rest.startswith("#"):
                return  # blank or comment-only line: no tokens at all
            self.handle_indent(lineno, pos)
        had_content = self.lex_code(lineno, text, pos)
        if self.depth == 0 and had_content:
            end = len(text) + 1
            self.tokens.append(Token("newline", "", lineno, end, lineno, end))

    def handle_indent(self, lineno: int, width: int):
        current = self.indents[-1]
        if width > current:
            self.indents.append(width)
            self.tokens.append(Token("indent", "", lineno, 1, lineno, width + 1))
        else:
            while width < self.indents[-1]:
                self.indents.pop()
                self.tokens.append(Token("dedent", "", lineno, 1, lineno, width + 1))
            if width != self.indents[-1]:
                self.error(f"dedent to unknown indentation level {width}",
                           lineno, 1, MslIndentationError)

    def lex_code(self, lineno: int, text: str, pos: int) -> bool:
        emitted = False
        n = len(text)
        while pos < n:
            ch = text[pos]
            if ch == " ":
                pos += 1
                continue
            if ch == "#":
                break
            col = pos + 1
            if ch.isalpha() or ch == "_":
                end = pos + 1
                while end < n and (text[end].isalnum() or text[end] == "_"):
                    end += 1
                self.emit("name", text[pos:end], lineno, col, end)
                pos = end
            elif ch.isdigit():
                pos = self.lex_number(lineno, text, pos)
            elif ch in "\"'":
                pos = self.lex_string(lineno, text, pos)
            else:
                two = text[pos:pos + 2]
                if two in TWO_CHAR_OPS:
                    self.emit("op", two, lineno, col, pos + 2)
                    pos += 2
                elif ch in ONE_CHAR_OPS:
                    if ch in "([":
                        self.depth += 1
                    elif ch in ")]":
                        self.depth = max(0, self.depth - 1)
                    self.emit("op", ch, lineno, col, pos + 1)
                    pos += 1
                else:
                    self.error(f"unexpected character {ch!r}", lineno, col)
            emitted = True
        return emitted

    def lex_number(self, lineno: int, text: str, pos: int) -> int:
        n = len(text)
        start = pos
        while pos < n and text[pos].isdigit():
            pos += 1
        is_float = False
        if pos < n and text[pos] == "." and pos + 1 < n and text[pos + 1].isdigit():
            is_float = True
            pos += 1
            while pos < n and text[pos].isdigit():
                pos += 1
        if pos < n and text[pos] in "eE":
            look = pos + 1
            if look < n and text[look] in "+-":
                look += 1
            if look < n and text[look].isdigit():
                is_float = True
                pos = look
                while pos < n and text[pos].isdigit():
                    pos += 1
        kind = "float" if is_float else "int"
        self.emit(kind, text[start:pos], lineno, start + 1, pos)
        return pos

    def lex_string(self, lineno: int, text: str, pos: int) -> int:
        quote = text[pos]
        n = len(text)
        out = []
        i = pos + 1
        while i < n:
            ch = text[i]
            if ch == "\\" and i + 1 < n:
                esc = text[i + 1]
                mapping = {"n": "\n", "t": "\t", "\\": "\\", "'": "'", '"': '"'}
                if esc not in mapping:
                    self.error(f"unsupported escape \\{esc}", lineno, i + 2)
                out.append(mapping[esc])
                i += 2
            elif ch == quote:
                token = Token("string", "".join(out), lineno, pos + 1, lineno, i + 2)
                self.tokens.append(token)
                return i + 1
            else:
                out.append(ch)
                i += 1
        self.error("unterminated string literal", lineno, pos + 1)

    def emit(self, kind: str, value: str, line: int, col: int, end: int):
        self.tokens.append(Token(kind, value, line, col, line, end + 1))
