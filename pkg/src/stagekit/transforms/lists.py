"""List idioms: literals become ``list_new`` (carrying any declared element
type), ``l.append(x)`` rebinds through ``list_append``, ``l.pop()`` becomes a
paired assignment, and ``ag.stack`` routes to the stack dispatch."""

from __future__ import annotations

from ..errors import ListPatternError
from ..syntax.ast import AstNode, copy_tree
from ..syntax.qualnames import qualified_name_of
from .common import (PassContext, assign, dispatch_call, intlit,
                     map_functions, map_statements, mark, string,
                     stmt_map_exprs)

PASS = "lists"


def run(module: AstNode, analyses: dict, ctx: PassContext) -> AstNode:
    def handle_fn(fn: AstNode) -> AstNode:
        element_types = fn.annotations.get("element_types", {})

        def handle(stmt: AstNode):
            call = _method_call(stmt)
            if call is not None:
                return _lower_method(stmt, call, ctx, element_types)
            return _rewrite_exprs(stmt, element_types)

        return map_statements(fn, handle)

    return map_functions(module, handle_fn)


def _method_call(stmt: AstNode):
    """The append/pop call a statement consists of, if any."""
    if stmt.kind == "ExprStmt":
        expr = stmt.slots["value"]
    elif stmt.kind == "Assign":
        expr = stmt.slots["value"]
    else:
        return None
    if expr.kind != "Call" or expr.slots["func"].kind != "Attribute":
        return None
    if expr.slots["func"].slots["attr"] in ("append", "pop"):
        return expr
    return None


def _lower_method(stmt, call, ctx: PassContext, element_types):
    method = call.slots["func"].slots["attr"]
    target = call.slots["func"].slots["value"]
    if qualified_name_of(target) is None:
        raise ListPatternError(
            f"{method} target must be a named list", call.span, PASS)
    args = [_expr(a, element_types) for a in call.slots["args"]]

    if method == "append":
        if stmt.kind != "ExprStmt":
            raise ListPatternError("append has no value to assign", stmt.span,
                                   PASS)
        if len(args) != 1:
            raise ListPatternError("append takes one argument", call.span, PASS)
        new_value = dispatch_call("list_append",
                                  [_expr(copy_tree(target), element_types),
                                   args[0]])
        return mark(assign(target, new_value), stmt)

    if args:
        raise ListPatternError("pop takes no arguments", call.span, PASS)
    pop_tmp = ctx.fresh("pop")
    stmts = [
        assign(_name(pop_tmp),
               dispatch_call("list_pop", [_expr(copy_tree(target), element_types)])),
        assign(target, _subscript(pop_tmp, 0)),
    ]
    if stmt.kind == "Assign":
        stmts.append(assign(stmt.slots["target"], _subscript(pop_tmp, 1)))
    return [mark(s, stmt) for s in stmts]


def _name(ident):
    from .common import name
    return name(ident)


def _subscript(ident, index):
    from ..syntax.ast import make
    return make("Subscript", None, value=_name(ident), index=intlit(index))


def _rewrite_exprs(stmt: AstNode, element_types) -> AstNode:
    annot = None
    if stmt.kind == "Assign" and stmt.slots["target"].kind == "Name":
        annot = element_types.get(stmt.slots["target"].slots["id"])

    def rewrite(expr: AstNode) -> AstNode:
        if expr.kind == "ListLiteral":
            return _wrap_literal(expr, None)
        if (expr.kind == "Call" and expr.slots["func"].kind == "Attribute"
                and expr.slots["func"].slots["value"].kind == "Name"
                and expr.slots["func"].slots["value"].slots["id"] == "ag"
                and expr.slots["func"].slots["attr"] == "stack"):
            return mark(dispatch_call("list_stack", list(expr.slots["args"])),
                        stmt)
        return expr

    # the assigned literal itself carries the declared element type
    if annot is not None and stmt.slots["value"].kind == "ListLiteral":
        inner = stmt.slots["value"]
        new_elements = [_expr(e, element_types) for e in inner.slots["elements"]]
        wrapped = mark(_wrap_literal(inner.replace(elements=new_elements), annot),
                       stmt)
        return stmt.replace(value=wrapped)
    return stmt_map_exprs(stmt, rewrite)


def _wrap_literal(literal: AstNode, elem_dtype: str | None) -> AstNode:
    args = [literal]
    if elem_dtype is not None:
        args.append(string(elem_dtype))
    return mark(dispatch_call("list_new", args), literal)


def _expr(expr: AstNode, element_types) -> AstNode:
    def rewrite(e: AstNode) -> AstNode:
        if e.kind == "ListLiteral":
            return _wrap_literal(e, None)
        return e

    from .common import map_exprs
    return map_exprs(expr, rewrite)
