"""Source positions. Lines and columns are 1-based, end positions inclusive."""

from __future__ import annotations

from dataclasses import dataclass

GENERATED_FILE = "<generated>"


@dataclass(frozen=True)
class SourceSpan:
    file: str
    start_line: int
    start_col: int
    end_line: int
    end_col: int

    def __post_init__(self):
        if self.start_line < 1 or self.start_col < 1:
            raise ValueError(f"span positions are 1-based: {self}")
        if (self.end_line, self.end_col) < (self.start_line, self.start_col):
            raise ValueError(f"span ends before it starts: {self}")

    def merge(self, other: "SourceSpan") -> "SourceSpan":
        start = min((self.start_line, self.start_col), (other.start_line, other.start_col))
        end = max((self.end_line, self.end_col), (other.end_line, other.end_col))
        return SourceSpan(self.file, start[0], start[1], end[0], end[1])

    @property
    def is_generated(self) -> bool:
        return self.file == GENERATED_FILE

    def __str__(self):
        return f"{self.file}:{self.start_line}:{self.start_col}"


def generated_span() -> SourceSpan:
    return SourceSpan(GENERATED_FILE, 1, 1, 1, 1)
