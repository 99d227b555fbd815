"""The MSL syntax tree.

One generic node class covers every kind; the KINDS table pins the named
slots each kind carries, split into child slots (nodes or node lists) and
data slots (strings, numbers).  Generic traversal, structural equality and
copying all derive from that table, which keeps the transform passes and the
pretty printer free of per-kind boilerplate.

Nodes are immutable by convention once a pass has produced its output tree.
Identity (uid) is what the analyses and source maps key on, never structure:
two structurally identical subtrees map to distinct origins.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Optional

from ..errors import InternalError
from .spans import SourceSpan, generated_span

_uid_counter = itertools.count(1)

# kind -> (child slots, data slots)
KINDS: dict[str, tuple[tuple[str, ...], tuple[str, ...]]] = {
    "Module": (("body",), ()),
    "FunctionDef": (("params", "body"), ("name",)),
    "Param": ((), ("name",)),
    "Block": (("stmts",), ()),
    "If": (("test", "body", "orelse"), ()),
    "While": (("test", "body"), ()),
    "For": (("var", "iter", "body"), ()),
    "Break": ((), ()),
    "Continue": ((), ()),
    "Return": (("value",), ()),
    "Assign": (("target", "value"), ()),
    "AugAssign": (("target", "value"), ("op",)),
    "ExprStmt": (("value",), ()),
    "Assert": (("test", "msg"), ()),
    "Call": (("func", "args", "kw_values"), ("kw_names",)),
    "Name": ((), ("id",)),
    "Attribute": (("value",), ("attr",)),
    "Subscript": (("value", "index"), ()),
    "ListLiteral": (("elements",), ()),
    "IntLit": ((), ("value",)),
    "FloatLit": ((), ("value",)),
    "BoolLit": ((), ("value",)),
    "NoneLit": ((), ()),
    "StrLit": ((), ("value",)),
    "BinOp": (("left", "right"), ("op",)),
    "BoolOp": (("left", "right"), ("op",)),
    "UnaryOp": (("operand",), ("op",)),
    "Compare": (("left", "right"), ("op",)),
    "Ternary": (("test", "if_true", "if_false"), ()),
}

STMT_KINDS = frozenset({
    "FunctionDef", "If", "While", "For", "Break", "Continue", "Return",
    "Assign", "AugAssign", "ExprStmt", "Assert",
})
EXPR_KINDS = frozenset({
    "Call", "Name", "Attribute", "Subscript", "ListLiteral", "IntLit",
    "FloatLit", "BoolLit", "NoneLit", "StrLit", "BinOp", "BoolOp", "UnaryOp",
    "Compare", "Ternary",
})


@dataclass(eq=False)  # identity equality: analyses key side tables on nodes
class AstNode:
    kind: str
    span: SourceSpan
    slots: dict
    origin: Optional["AstNode"] = None
    uid: int = field(default_factory=lambda: next(_uid_counter))
    annotations: dict = field(default_factory=dict)

    def __getitem__(self, slot: str):
        return self.slots[slot]

    def child_slots(self) -> tuple[str, ...]:
        return KINDS[self.kind][0]

    def children(self) -> Iterator["AstNode"]:
        for slot in self.child_slots():
            value = self.slots[slot]
            if isinstance(value, AstNode):
                yield value
            elif isinstance(value, list):
                yield from value

    def replace(self, **updates) -> "AstNode":
        """New node with some slots replaced; keeps span and origin."""
        slots = dict(self.slots)
        for key, value in updates.items():
            if key not in slots:
                raise InternalError(f"{self.kind} has no slot {key!r}")
            slots[key] = value
        return AstNode(self.kind, self.span, slots, origin=self.origin,
                       annotations=dict(self.annotations))

    def __repr__(self):
        return f"<{self.kind}#{self.uid}>"


def make(kind: str, span: SourceSpan | None = None, **slots) -> AstNode:
    """Build a node, checking the slots against the kind table."""
    if kind not in KINDS:
        raise InternalError(f"unknown node kind {kind!r}")
    child, data = KINDS[kind]
    expected = set(child) | set(data)
    given = set(slots)
    if expected != given:
        raise InternalError(
            f"{kind} expects slots {sorted(expected)}, got {sorted(given)}")
    return AstNode(kind, span or generated_span(), slots)


def walk(node: AstNode) -> Iterator[AstNode]:
    yield node
    for child in node.children():
        yield from walk(child)


def tree_equal(a: AstNode, b: AstNode) -> bool:
    """Structural equality ignoring spans, origins and node identity."""
    if a.kind != b.kind:
        return False
    child, data = KINDS[a.kind]
    for slot in data:
        if a.slots[slot] != b.slots[slot]:
            return False
    for slot in child:
        va, vb = a.slots[slot], b.slots[slot]
        if isinstance(va, AstNode) != isinstance(vb, AstNode):
            return False
        if isinstance(va, AstNode):
            if not tree_equal(va, vb):
                return False
        elif isinstance(va, list):
            if not isinstance(vb, list) or len(va) != len(vb):
                return False
            if not all(tree_equal(x, y) for x, y in zip(va, vb)):
                return False
        else:
            if va is not vb:  # both None
                return False
    return True


def copy_tree(node: AstNode) -> AstNode:
    """Deep copy with fresh uids; each copy's origin points at its source node."""
    slots = {}
    for slot in node.child_slots():
        value = node.slots[slot]
        if isinstance(value, AstNode):
            slots[slot] = copy_tree(value)
        elif isinstance(value, list):
            slots[slot] = [copy_tree(v) for v in value]
        else:
            slots[slot] = value
    for slot in KINDS[node.kind][1]:
        slots[slot] = node.slots[slot]
    return AstNode(node.kind, node.span, slots, origin=node,
                   annotations=dict(node.annotations))


def set_origin(node: AstNode, origin: AstNode) -> AstNode:
    """Attach an origin to every node of a generated subtree that lacks one."""
    for n in walk(node):
        if n.origin is None and n.span.is_generated:
            n.origin = origin
    return node


def origin_of(node: AstNode) -> SourceSpan:
    """Span of the earliest ancestor in the origin chain (the user's line)."""
    seen = set()
    current = node
    while current.origin is not None and current.origin is not current:
        if current.uid in seen:
            raise InternalError("cycle in origin chain")
        seen.add(current.uid)
        current = current.origin
    if current.span.is_generated:
        raise InternalError(
            f"transform-produced node {current.kind} has no origin")
    return current.span
