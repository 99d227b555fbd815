"""Lowering of break, continue and return: three sibling passes that replace
nonlocal control flow with guard variables and conditionals.

Break conjoins a fresh guard into the loop test (for-loops guard the body
instead, running remaining iterations as no-ops).  Continue guards the rest
of the loop body.  Early returns become a return-value variable: where a
branch ends in ``return`` the statement suffix is absorbed into the opposite
branch, and only functions with returns buried in loops or partial branches
fall back to an explicit did-return flag.
"""

from __future__ import annotations

from ..syntax.ast import AstNode, make, walk
from .common import (PassContext, assign, boollit, if_node, mark, name,
                     nonelit, return_stmt, map_functions)


def _not(expr: AstNode) -> AstNode:
    return make("UnaryOp", None, op="not", operand=expr)


def _and(left: AstNode, right: AstNode) -> AstNode:
    return make("BoolOp", None, op="and", left=left, right=right)


def _contains(stmt: AstNode, kind: str, through_loops: bool = True) -> bool:
    """Does the statement contain `kind`, seen from just outside it?  Jumps
    inside nested loops belong to those loops and are not visible unless
    ``through_loops`` is set."""
    if stmt.kind == kind:
        return True
    if stmt.kind == "FunctionDef":
        return False
    return any(_contains_inner(child, kind, through_loops)
               for child in _sub_statements(stmt))


def _contains_inner(stmt: AstNode, kind: str, through_loops: bool) -> bool:
    if stmt.kind == kind:
        return True
    if stmt.kind == "FunctionDef":
        return False
    if not through_loops and stmt.kind in ("While", "For"):
        return False
    return any(_contains_inner(child, kind, through_loops)
               for child in _sub_statements(stmt))


def _sub_statements(stmt: AstNode):
    if stmt.kind == "If":
        yield from stmt.slots["body"].slots["stmts"]
        yield from stmt.slots["orelse"].slots["stmts"]
    elif stmt.kind in ("While", "For"):
        yield from stmt.slots["body"].slots["stmts"]


# --- break ----------------------------------------------------------------------


def run_break(module: AstNode, analyses: dict, ctx: PassContext) -> AstNode:
    return map_functions(module, lambda fn: _lower_jumps_in_fn(fn, "Break", ctx))


def run_continue(module: AstNode, analyses: dict, ctx: PassContext) -> AstNode:
    return map_functions(module, lambda fn: _lower_jumps_in_fn(fn, "Continue", ctx))


def _lower_jumps_in_fn(fn: AstNode, kind: str, ctx: PassContext) -> AstNode:
    def visit_block(stmts: list) -> list:
        out = []
        for stmt in stmts:
            out.extend(_visit_stmt(stmt))
        return out

    def _visit_stmt(stmt: AstNode) -> list:
        if stmt.kind == "If":
            return [stmt.replace(
                body=stmt.slots["body"].replace(
                    stmts=visit_block(stmt.slots["body"].slots["stmts"])),
                orelse=stmt.slots["orelse"].replace(
                    stmts=visit_block(stmt.slots["orelse"].slots["stmts"])))]
        if stmt.kind in ("While", "For"):
            inner = visit_block(stmt.slots["body"].slots["stmts"])
            loop = stmt.replace(body=stmt.slots["body"].replace(stmts=inner))
            if not _contains(loop, kind, through_loops=False):
                return [loop]
            return _lower_loop(loop, kind, ctx)
        return [stmt]

    body = fn.slots["body"]
    return fn.replace(body=body.replace(stmts=visit_block(body.slots["stmts"])))


def _lower_loop(loop: AstNode, kind: str, ctx: PassContext) -> list:
    label = "brk" if kind == "Break" else "cont"
    guard = ctx.fresh(label)
    body_stmts = _guard_block(loop.slots["body"].slots["stmts"], kind, guard)

    if kind == "Continue":
        # reset at the top of every iteration
        body_stmts = [mark(assign(name(guard), boollit(False)), loop)] + body_stmts
        new_loop = loop.replace(body=loop.slots["body"].replace(stmts=body_stmts))
        return [new_loop]

    prelude = mark(assign(name(guard), boollit(False)), loop)
    if loop.kind == "While":
        new_test = mark(_and(_not(name(guard)), loop.slots["test"]), loop)
        new_loop = loop.replace(
            test=new_test,
            body=loop.slots["body"].replace(stmts=body_stmts))
    else:  # For: no test to conjoin; surviving iterations no-op
        guarded = mark(if_node(_not(name(guard)), body_stmts, []), loop)
        new_loop = loop.replace(body=loop.slots["body"].replace(stmts=[guarded]))
    return [prelude, new_loop]


def _guard_block(stmts: list, kind: str, guard: str) -> list:
    """Replace the jump with a guard assignment and wrap each statement
    suffix that could run after it."""
    out = []
    for index, stmt in enumerate(stmts):
        rest = stmts[index + 1:]
        if stmt.kind == kind:
            out.append(mark(assign(name(guard), boollit(True)), stmt))
            if rest:
                out.append(mark(if_node(_not(name(guard)),
                                        _guard_block(rest, kind, guard), []),
                                stmt))
            return out
        if stmt.kind == "If" and _contains(stmt, kind, through_loops=False):
            new_if = stmt.replace(
                body=stmt.slots["body"].replace(
                    stmts=_guard_block(stmt.slots["body"].slots["stmts"], kind, guard)),
                orelse=stmt.slots["orelse"].replace(
                    stmts=_guard_block(stmt.slots["orelse"].slots["stmts"], kind, guard)))
            out.append(new_if)
            if rest:
                out.append(mark(if_node(_not(name(guard)),
                                        _guard_block(rest, kind, guard), []),
                                stmt))
            return out
        out.append(stmt)
    return out


# --- return ----------------------------------------------------------------------


class _NeedFlags(Exception):
    pass


def run_return(module: AstNode, analyses: dict, ctx: PassContext) -> AstNode:
    return map_functions(module, lambda fn: _lower_returns(fn, ctx))


def _lower_returns(fn: AstNode, ctx: PassContext) -> AstNode:
    stmts = fn.slots["body"].slots["stmts"]
    returns = [n for n in _walk_function_stmts(stmts) if n.kind == "Return"]
    if not returns:
        trailing = mark(return_stmt(nonelit()), fn)
        return fn.replace(body=fn.slots["body"].replace(stmts=stmts + [trailing]))
    if len(returns) == 1 and stmts and stmts[-1] is returns[0]:
        return fn  # already a single trailing return
    retval = ctx.fresh("retval")
    try:
        lowered, terminated = _absorb_block(stmts, retval, fn)
        if not terminated:
            lowered = [mark(assign(name(retval), nonelit()), fn)] + lowered
    except _NeedFlags:
        flag = ctx.fresh("did_return")
        lowered = [mark(assign(name(retval), nonelit()), fn),
                   mark(assign(name(flag), boollit(False)), fn)]
        lowered += _flag_block(stmts, retval, flag)
    lowered.append(mark(return_stmt(name(retval)), fn))
    return fn.replace(body=fn.slots["body"].replace(stmts=lowered))


def _walk_function_stmts(stmts):
    for stmt in stmts:
        yield stmt
        if stmt.kind != "FunctionDef":
            yield from _walk_function_stmts(list(_sub_statements(stmt)))


def _absorb_block(stmts: list, retval: str, origin) -> tuple[list, bool]:
    """Suffix-absorbing lowering; raises _NeedFlags on patterns it cannot
    express without a did-return flag."""
    out = []
    for index, stmt in enumerate(stmts):
        rest = stmts[index + 1:]
        if stmt.kind == "Return":
            value = stmt.slots["value"]
            out.append(mark(assign(name(retval),
                                   value if value is not None else nonelit()),
                            stmt))
            return out, True
        has_return = _contains(stmt, "Return")
        if not has_return:
            out.append(stmt)
            continue
        if stmt.kind != "If":
            raise _NeedFlags  # return inside a loop
        body, body_term = _absorb_block(stmt.slots["body"].slots["stmts"],
                                        retval, origin)
        orelse, else_term = _absorb_block(stmt.slots["orelse"].slots["stmts"],
                                          retval, origin)
        if body_term and else_term:
            out.append(stmt.replace(body=stmt.slots["body"].replace(stmts=body),
                                    orelse=stmt.slots["orelse"].replace(stmts=orelse)))
            return out, True
        if body_term != else_term:
            suffix, suffix_term = _absorb_block(rest, retval, origin)
            if body_term:
                orelse = orelse + suffix
            else:
                body = body + suffix
            if not orelse and not body_term:
                raise _NeedFlags
            new_if = stmt.replace(body=stmt.slots["body"].replace(stmts=body),
                                  orelse=stmt.slots["orelse"].replace(stmts=orelse))
            out.append(new_if)
            return out, suffix_term
        # returns buried under deeper conditions in both branches
        raise _NeedFlags
    return out, False


def _flag_block(stmts: list, retval: str, flag: str) -> list:
    out = []
    for index, stmt in enumerate(stmts):
        rest = stmts[index + 1:]
        if stmt.kind == "Return":
            value = stmt.slots["value"]
            out.append(mark(assign(name(retval),
                                   value if value is not None else nonelit()),
                            stmt))
            out.append(mark(assign(name(flag), boollit(True)), stmt))
            return out  # anything after a bare return is unreachable
        if not _contains(stmt, "Return"):
            out.append(stmt)
            continue
        out.append(_flag_stmt(stmt, retval, flag))
        if rest:
            out.append(mark(if_node(_not(name(flag)),
                                    _flag_block(rest, retval, flag), []), stmt))
        return out
    return out


def _flag_stmt(stmt: AstNode, retval: str, flag: str) -> AstNode:
    if stmt.kind == "If":
        return stmt.replace(
            body=stmt.slots["body"].replace(
                stmts=_flag_block(stmt.slots["body"].slots["stmts"], retval, flag)),
            orelse=stmt.slots["orelse"].replace(
                stmts=_flag_block(stmt.slots["orelse"].slots["stmts"], retval, flag)))
    if stmt.kind == "While":
        new_test = mark(_and(_not(name(flag)), stmt.slots["test"]), stmt)
        return stmt.replace(
            test=new_test,
            body=stmt.slots["body"].replace(
                stmts=_flag_block(stmt.slots["body"].slots["stmts"], retval, flag)))
    if stmt.kind == "For":
        guarded = mark(if_node(
            _not(name(flag)),
            _flag_block(stmt.slots["body"].slots["stmts"], retval, flag), []),
            stmt)
        return stmt.replace(body=stmt.slots["body"].replace(stmts=[guarded]))
    return stmt
