"""Function wrappers: move each converted function's body into an inner thunk
invoked through ``ag__.fn_scope``, which opens a named trace scope and
installs the error handler that reports original source positions."""

from __future__ import annotations

from ..syntax.ast import AstNode
from .common import (DISPATCH, PassContext, dispatch_call, funcdef,
                     map_functions, mark, name, return_stmt, string)


def run(module: AstNode, analyses: dict, ctx: PassContext) -> AstNode:
    def handle(fn: AstNode) -> AstNode:
        if fn.slots["name"].startswith(DISPATCH):
            return fn  # generated thunks stay bare
        inner_name = ctx.fresh("fnbody")
        inner = funcdef(inner_name, [], fn.slots["body"].slots["stmts"])
        ret = return_stmt(dispatch_call(
            "fn_scope", [string(fn.slots["name"]), name(inner_name)]))
        body = fn.slots["body"].replace(stmts=[mark(inner, fn), mark(ret, fn)])
        return fn.replace(body=body)

    return map_functions(module, handle)
