"""Structured AST dump for debugging and golden tests.

Layout mirrors the usual tree-dump style: one node or field per line,
``| `` markers for depth.  Nodes with a primary data slot show it inline
(``Name: a``, ``IntLit: 3``) so dumps stay compact.
"""

from __future__ import annotations

from .ast import AstNode, KINDS

_INLINE_DATA = {
    "Name": "id",
    "IntLit": "value",
    "FloatLit": "value",
    "BoolLit": "value",
    "StrLit": "value",
    "Param": "name",
}


def pretty_print(node: AstNode) -> str:
    lines: list[str] = []
    _emit(node, 0, lines, prefix=None)
    return "\n".join(lines) + "\n"


def _head(node: AstNode) -> str:
    if node.kind in _INLINE_DATA:
        return f"{node.kind}: {node.slots[_INLINE_DATA[node.kind]]}"
    return f"{node.kind}:"


def _emit(node: AstNode, depth: int, lines: list[str], prefix: str | None):
    pad = "| " * depth
    label = f"{prefix}={_head(node)}" if prefix else _head(node)
    lines.append(pad + label)
    child_slots, data_slots = KINDS[node.kind]
    for slot in data_slots:
        if node.kind in _INLINE_DATA and slot == _INLINE_DATA[node.kind]:
            continue
        lines.append("| " * (depth + 1) + f"{slot}={node.slots[slot]!r}")
    for slot in child_slots:
        value = node.slots[slot]
        if value is None:
            lines.append("| " * (depth + 1) + f"{slot}=None")
        elif isinstance(value, AstNode):
            _emit(value, depth + 1, lines, prefix=slot)
        else:
            lines.append("| " * (depth + 1) + f"{slot}=[")
            for item in value:
                _emit(item, depth + 2, lines, prefix=None)
            lines.append("| " * (depth + 1) + "]")
