"""In-place expression conversions: assert statements, slice reads/writes,
ternary expressions and logical operators, all rewritten to overloadable
dispatch calls."""

from __future__ import annotations

from ..syntax.ast import AstNode, copy_tree
from .common import (PassContext, assign, dispatch_call, expr_stmt, funcdef,
                     map_exprs, map_functions, map_statements, mark, name,
                     nonelit, return_stmt, stmt_map_exprs)

_COMPARE_OPS = {"<": "lt_", ">": "gt_", "<=": "le_", ">=": "ge_",
                "==": "eq_", "!=": "ne_"}


def run_assert(module: AstNode, analyses: dict, ctx: PassContext) -> AstNode:
    def handle(stmt: AstNode):
        if stmt.kind != "Assert":
            return stmt
        msg = stmt.slots["msg"]
        call = dispatch_call("assert_stmt", [
            stmt.slots["test"], msg if msg is not None else nonelit()])
        return mark(expr_stmt(call), stmt)

    return map_functions(module, lambda fn: map_statements(fn, handle))


# --- slices -------------------------------------------------------------------

def run_slices(module: AstNode, analyses: dict, ctx: PassContext) -> AstNode:
    def rewrite_reads(expr: AstNode) -> AstNode:
        if expr.kind == "Subscript":
            return mark(dispatch_call("getitem", [expr.slots["value"],
                                                  expr.slots["index"]]), expr)
        return expr

    def handle(stmt: AstNode):
        if stmt.kind in ("Assign", "AugAssign") and \
                stmt.slots["target"].kind == "Subscript":
            value = map_exprs(stmt.slots["value"], rewrite_reads)
            target = stmt.slots["target"]
            if stmt.kind == "AugAssign":
                read = map_exprs(copy_tree(target), rewrite_reads)
                value = _binop(stmt.slots["op"], read, value)
            new = _lower_store(target, value, rewrite_reads)
            return mark(new, stmt)
        return stmt_map_exprs(stmt, rewrite_reads)

    return map_functions(module, lambda fn: map_statements(fn, handle))


def _binop(op: str, left: AstNode, right: AstNode) -> AstNode:
    from ..syntax.ast import make
    return make("BinOp", None, op=op, left=left, right=right)


def _lower_store(target: AstNode, value: AstNode, rewrite_reads) -> AstNode:
    """x[i] = v  ->  x = ag__.setitem(x, i, v), recursively for chains."""
    base = target.slots["value"]
    index = map_exprs(target.slots["index"], rewrite_reads)
    base_expr = map_exprs(copy_tree(base), rewrite_reads)
    call = dispatch_call("setitem", [base_expr, index, value])
    if base.kind == "Subscript":
        return _lower_store(base, call, rewrite_reads)
    return assign(base, call)


# --- ternary --------------------------------------------------------------------

def run_ternary(module: AstNode, analyses: dict, ctx: PassContext) -> AstNode:
    def handle(stmt: AstNode):
        prelude: list = []

        def rewrite(expr: AstNode) -> AstNode:
            if expr.kind != "Ternary":
                return expr
            true_name = ctx.fresh("ternary_true")
            false_name = f"ag__ternary_false_{ctx.counter}"
            prelude.append(mark(
                funcdef(true_name, [], [return_stmt(expr.slots["if_true"])]),
                stmt))
            prelude.append(mark(
                funcdef(false_name, [], [return_stmt(expr.slots["if_false"])]),
                stmt))
            return mark(dispatch_call("if_expr", [
                expr.slots["test"], name(true_name), name(false_name)]), stmt)

        new_stmt = stmt_map_exprs(stmt, rewrite)
        return prelude + [new_stmt] if prelude else new_stmt

    return map_functions(module, lambda fn: map_statements(fn, handle))


# --- logical --------------------------------------------------------------------

def run_logical(module: AstNode, analyses: dict, ctx: PassContext) -> AstNode:
    def handle(stmt: AstNode):
        prelude: list = []

        def rewrite(expr: AstNode) -> AstNode:
            if expr.kind == "BoolOp":
                lazy = ctx.fresh("lazy")
                prelude.append(mark(
                    funcdef(lazy, [], [return_stmt(expr.slots["right"])]), stmt))
                op = "and_" if expr.slots["op"] == "and" else "or_"
                return mark(dispatch_call(op, [expr.slots["left"], name(lazy)]),
                            stmt)
            if expr.kind == "UnaryOp" and expr.slots["op"] == "not":
                return mark(dispatch_call("not_", [expr.slots["operand"]]), stmt)
            if expr.kind == "Compare":
                op = _COMPARE_OPS[expr.slots["op"]]
                return mark(dispatch_call(op, [expr.slots["left"],
                                               expr.slots["right"]]), stmt)
            return expr

        new_stmt = stmt_map_exprs(stmt, rewrite)
        return prelude + [new_stmt] if prelude else new_stmt

    return map_functions(module, lambda fn: map_statements(fn, handle))
