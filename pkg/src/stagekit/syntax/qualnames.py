"""Qualified names: compound symbols like ``a.b`` or ``a[2]`` treated as units
by the analyses.  Only names, attribute chains and literal-key subscripts
qualify; calls and arithmetic have no qualified name."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .ast import AstNode


@dataclass(frozen=True)
class QualifiedName:
    components: tuple  # first is an identifier; rest are attr names / index keys

    def __post_init__(self):
        if not self.components:
            raise ValueError("qualified name cannot be empty")

    @property
    def root(self) -> str:
        return self.components[0]

    @property
    def is_simple(self) -> bool:
        return len(self.components) == 1

    def starts_with(self, other: "QualifiedName") -> bool:
        k = len(other.components)
        return self.components[:k] == other.components

    def __str__(self):
        out = self.components[0]
        for part in self.components[1:]:
            if isinstance(part, str):
                out += f".{part}"
            else:
                out += f"[{part!r}]" if isinstance(part, str) else f"[{part}]"
        return out

    def __lt__(self, other):
        return str(self) < str(other)


def qn(name: str) -> QualifiedName:
    return QualifiedName((name,))


def qualified_name_of(expr: AstNode) -> Optional[QualifiedName]:
    if expr.kind == "Name":
        return QualifiedName((expr.slots["id"],))
    if expr.kind == "Attribute":
        base = qualified_name_of(expr.slots["value"])
        if base is None:
            return None
        return QualifiedName(base.components + (expr.slots["attr"],))
    if expr.kind == "Subscript":
        index = expr.slots["index"]
        if index.kind not in ("IntLit", "StrLit"):
            return None
        base = qualified_name_of(expr.slots["value"])
        if base is None:
            return None
        return QualifiedName(base.components + (index.slots["value"],))
    return None
