"""Function-call overloading: every call whose callee is not an ``m.``
intrinsic or an already-generated dispatch call is routed through
``ag__.converted_call`` so the runtime can decide how to execute it."""

from __future__ import annotations

from ..errors import ConversionError
from ..syntax.ast import AstNode
from .common import (PassContext, dispatch_call, map_functions,
                     map_statements, mark, namespace_of_call, stmt_map_exprs)

PASS = "calls"


def run(module: AstNode, analyses: dict, ctx: PassContext) -> AstNode:
    def handle(stmt: AstNode):
        def rewrite(expr: AstNode) -> AstNode:
            if expr.kind != "Call":
                return expr
            space = namespace_of_call(expr)
            if space in ("m", "ag__"):
                return expr
            if space == "ag":
                raise ConversionError(
                    "unexpected 'ag.' call after the directive pass",
                    expr.span, PASS)
            if expr.slots["kw_names"]:
                raise ConversionError(
                    "keyword arguments on a user call", expr.span, PASS)
            return mark(dispatch_call(
                "converted_call",
                [expr.slots["func"]] + list(expr.slots["args"])), stmt)

        return stmt_map_exprs(stmt, rewrite)

    return map_functions(module, lambda fn: map_statements(fn, handle))
