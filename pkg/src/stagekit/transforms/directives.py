"""Directive pass: pulls ``ag.set_loop_options`` and ``ag.set_element_type``
calls out of the statement stream and attaches them as annotations on the
enclosing loop node and function scope."""

from __future__ import annotations

from ..errors import DirectiveError
from ..syntax.ast import AstNode
from .common import PassContext, map_functions

PASS = "directives"

DTYPE_NAMES = {"float": "f64", "int": "i64", "bool": "bool"}


def run(module: AstNode, analyses: dict, ctx: PassContext) -> AstNode:
    removed = 0

    def handle_fn(fn: AstNode) -> AstNode:
        nonlocal removed
        element_types = dict(fn.annotations.get("element_types", {}))
        body = _visit_block(fn.slots["body"], element_types, in_loop_head=False)
        new_fn = fn.replace(body=body)
        if element_types:
            new_fn.annotations["element_types"] = element_types
        removed += _count_removed(fn, new_fn)
        return new_fn

    out = map_functions(module, handle_fn)
    if removed:
        ctx.note(PASS, f"attached {removed} directive(s)")
    return out


def _count_removed(old: AstNode, new: AstNode) -> int:
    from ..syntax.ast import walk
    old_n = sum(1 for n in walk(old) if _directive_kind(n))
    new_n = sum(1 for n in walk(new) if _directive_kind(n))
    return old_n - new_n


def _directive_kind(stmt: AstNode) -> str | None:
    if stmt.kind != "ExprStmt":
        return None
    call = stmt.slots["value"]
    if call.kind != "Call":
        return None
    func = call.slots["func"]
    if (func.kind == "Attribute" and func.slots["value"].kind == "Name"
            and func.slots["value"].slots["id"] == "ag"):
        return func.slots["attr"]
    return None


def _visit_block(block: AstNode, element_types: dict, in_loop_head: bool) -> AstNode:
    out = []
    for index, stmt in enumerate(block.slots["stmts"]):
        kind = _directive_kind(stmt)
        if kind == "set_loop_options":
            if not (in_loop_head and index == 0):
                raise DirectiveError(
                    "ag.set_loop_options must be the first statement of a "
                    "loop body", stmt.span, PASS)
            # consumed by the parent loop below
            out.append(stmt)
            continue
        if kind == "set_element_type":
            _record_element_type(stmt.slots["value"], element_types)
            continue
        if kind == "stack":
            out.append(stmt)  # expression-level; the lists pass rewrites it
            continue
        if kind is not None:
            raise DirectiveError(f"unknown directive ag.{kind}", stmt.span, PASS)

        if stmt.kind in ("While", "For"):
            body = _visit_block(stmt.slots["body"], element_types,
                                in_loop_head=True)
            body, options = _strip_loop_options(body)
            new_stmt = stmt.replace(body=body)
            if options is not None:
                new_stmt.annotations["loop_options"] = options
            out.append(new_stmt)
        elif stmt.kind == "If":
            out.append(stmt.replace(
                body=_visit_block(stmt.slots["body"], element_types, False),
                orelse=_visit_block(stmt.slots["orelse"], element_types, False)))
        else:
            out.append(stmt)
    return block.replace(stmts=out)


def _strip_loop_options(block: AstNode):
    stmts = block.slots["stmts"]
    if not stmts or _directive_kind(stmts[0]) != "set_loop_options":
        return block, None
    call = stmts[0].slots["value"]
    if call.slots["args"]:
        raise DirectiveError("ag.set_loop_options takes keyword arguments only",
                             call.span, PASS)
    options = {}
    for key, value in zip(call.slots["kw_names"], call.slots["kw_values"]):
        if key == "max_iterations":
            if value.kind != "IntLit" or value.slots["value"] <= 0:
                raise DirectiveError("max_iterations must be a positive integer "
                                     "literal", value.span, PASS)
            options["max_iterations"] = value.slots["value"]
        elif key == "parallel_hint":
            if value.kind != "BoolLit":
                raise DirectiveError("parallel_hint must be a bool literal",
                                     value.span, PASS)
            options["parallel_hint"] = value.slots["value"]
        else:
            raise DirectiveError(f"unknown loop option {key!r}", call.span, PASS)
    if len(stmts) == 1:
        raise DirectiveError("loop body has only a directive", call.span, PASS)
    return block.replace(stmts=stmts[1:]), options


def _record_element_type(call: AstNode, element_types: dict):
    args = call.slots["args"]
    if len(args) != 2 or call.slots["kw_names"]:
        raise DirectiveError("ag.set_element_type takes (symbol, dtype)",
                             call.span, PASS)
    symbol, dtype = args
    if symbol.kind != "Name":
        raise DirectiveError("ag.set_element_type needs a plain variable",
                             symbol.span, PASS)
    if dtype.kind != "Name" or dtype.slots["id"] not in DTYPE_NAMES:
        raise DirectiveError("element dtype must be one of float, int, bool",
                             dtype.span, PASS)
    element_types[symbol.slots["id"]] = DTYPE_NAMES[dtype.slots["id"]]
