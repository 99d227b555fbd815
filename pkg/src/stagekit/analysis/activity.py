"""Activity analysis: which qualified names each statement reads and directly
modifies, plus lexical scope bookkeeping.

Only direct modifications count as writes: ``a.b = c`` modifies ``a.b`` and
not ``a``.  Reading a compound name also reads its prefixes (using ``a.b``
needs ``a`` to exist), which the loop-state selection in the control-flow
pass relies on.  Reserved namespace roots (``m``, ``ag``, ``ag__``) and
builtins are not symbols.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..syntax.ast import AstNode
from ..syntax.qualnames import QualifiedName, qualified_name_of

IGNORED_ROOTS = frozenset({"m", "ag", "ag__", "print", "range", "len",
                           "float", "int", "bool"})


@dataclass
class ActivityScope:
    fn: AstNode
    read: set = field(default_factory=set)
    modified: set = field(default_factory=set)
    params: set = field(default_factory=set)
    parent: Optional["ActivityScope"] = None


@dataclass
class ActivityInfo:
    node_reads: dict = field(default_factory=dict)   # own evaluation only
    node_writes: dict = field(default_factory=dict)
    agg_reads: dict = field(default_factory=dict)    # including nested bodies
    agg_writes: dict = field(default_factory=dict)
    scope: ActivityScope | None = None

    def reads(self, node) -> set:
        return self.node_reads.get(node, set())

    def writes(self, node) -> set:
        return self.node_writes.get(node, set())


def activity(fn: AstNode, parent_scope: ActivityScope | None = None) -> ActivityInfo:
    info = ActivityInfo()
    scope = ActivityScope(fn, parent=parent_scope)
    scope.params = {p.slots["name"] for p in fn.slots["params"]}
    info.scope = scope
    for stmt in fn.slots["body"].slots["stmts"]:
        _stmt_activity(stmt, info)
    for reads in info.agg_reads.values():
        scope.read |= reads
    for writes in info.agg_writes.values():
        scope.modified |= writes
    return info


def _keep(name: QualifiedName) -> bool:
    return name.root not in IGNORED_ROOTS


def _with_prefixes(names: set) -> set:
    out = set()
    for name in names:
        for k in range(1, len(name.components) + 1):
            out.add(QualifiedName(name.components[:k]))
    return out


def expr_reads(expr: AstNode | None) -> set:
    """Qualified names read when evaluating an expression."""
    reads: set = set()
    if expr is None:
        return reads
    name = qualified_name_of(expr)
    if name is not None:
        if _keep(name):
            reads |= _with_prefixes({name})
        return reads
    for child in expr.children():
        reads |= expr_reads(child)
    return reads


def target_activity(target: AstNode) -> tuple[set, set]:
    """(reads, writes) of an assignment target."""
    name = qualified_name_of(target)
    if name is not None:
        if not _keep(name):
            return set(), set()
        reads = _with_prefixes({name}) - {name}  # writing a.b reads a
        return reads, {name}
    if target.kind == "Subscript":
        # non-literal index: value semantics say the root is rebound
        base_reads, base_writes = target_activity(target.slots["value"])
        reads = base_reads | set(base_writes) | expr_reads(target.slots["index"])
        return reads, base_writes
    if target.kind == "Attribute":
        base_reads, base_writes = target_activity(target.slots["value"])
        return base_reads | set(base_writes), base_writes
    return expr_reads(target), set()


def _function_free_reads(fn: AstNode) -> set:
    """Free reads of a nested function: what defining it may later consume."""
    inner = activity(fn)
    bound = {p.slots["name"] for p in fn.slots["params"]}
    bound |= {w.root for w in inner.scope.modified if w.is_simple}
    return {r for r in inner.scope.read if r.root not in bound}


def _record(info: ActivityInfo, node: AstNode, reads: set, writes: set):
    info.node_reads[node] = reads
    info.node_writes[node] = writes


def _stmt_activity(stmt: AstNode, info: ActivityInfo) -> tuple[set, set]:
    """Processes one statement; returns aggregate (reads, writes)."""
    kind = stmt.kind
    if kind == "Assign":
        t_reads, t_writes = target_activity(stmt.slots["target"])
        reads = t_reads | expr_reads(stmt.slots["value"])
        _record(info, stmt, reads, t_writes)
        agg = (reads, set(t_writes))
    elif kind == "AugAssign":
        t_reads, t_writes = target_activity(stmt.slots["target"])
        reads = t_reads | set(t_writes) | expr_reads(stmt.slots["value"])
        _record(info, stmt, reads, t_writes)
        agg = (reads, set(t_writes))
    elif kind == "ExprStmt":
        reads = expr_reads(stmt.slots["value"])
        _record(info, stmt, reads, set())
        agg = (reads, set())
    elif kind == "Return":
        reads = expr_reads(stmt.slots["value"])
        _record(info, stmt, reads, set())
        agg = (reads, set())
    elif kind == "Assert":
        reads = expr_reads(stmt.slots["test"]) | expr_reads(stmt.slots["msg"])
        _record(info, stmt, reads, set())
        agg = (reads, set())
    elif kind in ("Break", "Continue"):
        _record(info, stmt, set(), set())
        agg = (set(), set())
    elif kind == "If":
        test_reads = expr_reads(stmt.slots["test"])
        _record(info, stmt, test_reads, set())
        reads, writes = set(test_reads), set()
        for sub in (stmt.slots["body"].slots["stmts"]
                    + stmt.slots["orelse"].slots["stmts"]):
            r, w = _stmt_activity(sub, info)
            reads |= r
            writes |= w
        agg = (reads, writes)
    elif kind == "While":
        test_reads = expr_reads(stmt.slots["test"])
        _record(info, stmt, test_reads, set())
        reads, writes = set(test_reads), set()
        for sub in stmt.slots["body"].slots["stmts"]:
            r, w = _stmt_activity(sub, info)
            reads |= r
            writes |= w
        agg = (reads, writes)
    elif kind == "For":
        iter_reads = expr_reads(stmt.slots["iter"])
        var = QualifiedName((stmt.slots["var"].slots["id"],))
        _record(info, stmt, iter_reads, {var})
        reads, writes = set(iter_reads), {var}
        for sub in stmt.slots["body"].slots["stmts"]:
            r, w = _stmt_activity(sub, info)
            reads |= r
            writes |= w
        agg = (reads, writes)
    elif kind == "FunctionDef":
        free = _function_free_reads(stmt)
        writes = {QualifiedName((stmt.slots["name"],))}
        _record(info, stmt, free, writes)
        agg = (free, writes)
    else:
        _record(info, stmt, set(), set())
        agg = (set(), set())

    info.agg_reads[stmt] = agg[0]
    info.agg_writes[stmt] = agg[1]
    return agg
