"""Functionalization of local control flow.

Conditionals become two niladic thunks returning the symbols they modify
that are live afterwards; loops become test/body functions over an explicit
state tuple (the symbols the body modifies that are live around or after the
loop).  Symbols a construct may leave unassigned are pre-initialized to the
undefined sentinel so the functional form can always return them.

All dataflow facts are snapshotted per construct from a fresh analysis of
the function before any rewriting, then statements are converted innermost
first so identity-keyed facts stay valid for the enclosing constructs.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..analysis import analyze_function
from ..analysis.dataflow import UNDEF_SITE
from ..errors import ConversionError
from ..syntax.ast import AstNode, make
from ..syntax.qualnames import QualifiedName
from .common import (PassContext, assign, dispatch_call, expr_stmt, funcdef,
                     intlit, listlit, map_functions, mark, name, nonelit,
                     qn_expr, return_stmt, string)

PASS = "control_flow"


@dataclass
class _Facts:
    out_syms: list          # conditionals: returned symbols
    state: list             # loops: state tuple symbols
    captures: list
    never_defined: set
    options: dict


def run(module: AstNode, analyses: dict, ctx: PassContext) -> AstNode:
    return map_functions(module, lambda fn: _convert_fn(fn, ctx))


def _convert_fn(fn: AstNode, ctx: PassContext) -> AstNode:
    fa = analyze_function(fn)
    snap: dict = {}
    for node in fa.cfg.statements():
        if node.kind in ("If", "While", "For"):
            snap[node] = _snapshot(node, fa)

    def process_block(stmts: list) -> list:
        out = []
        for stmt in stmts:
            out.extend(process_stmt(stmt))
        return out

    def process_stmt(stmt: AstNode) -> list:
        if stmt.kind == "If":
            facts = snap[stmt]
            body = process_block(stmt.slots["body"].slots["stmts"])
            orelse = process_block(stmt.slots["orelse"].slots["stmts"])
            return _convert_if(stmt, facts, body, orelse, ctx)
        if stmt.kind == "While":
            facts = snap[stmt]
            body = process_block(stmt.slots["body"].slots["stmts"])
            return _convert_while(stmt, facts, body, ctx)
        if stmt.kind == "For":
            facts = snap[stmt]
            body = process_block(stmt.slots["body"].slots["stmts"])
            return _convert_for(stmt, facts, body, ctx)
        return [stmt]

    body = fn.slots["body"]
    return fn.replace(body=body.replace(stmts=process_block(body.slots["stmts"])))


def _snapshot(stmt: AstNode, fa) -> _Facts:
    act, flow, cfg = fa.activity, fa.flow, fa.cfg
    modified = set(fa.activity.agg_writes.get(stmt, set()))
    reach_in = flow.reach_in.get(stmt, set())
    # defs reaching from within the construct itself (via loop back edges)
    # don't count: the symbol is still unbound when control first arrives
    inside = set(_statements_within(stmt))
    really_defined = {d.name for d in reach_in
                      if d.node is not UNDEF_SITE and d.node not in inside}
    never_defined = {s for s in modified if s not in really_defined}

    if stmt.kind == "If":
        live_after = flow.live_after(cfg, stmt)
        out_syms = sorted((modified & live_after), key=str)
        return _Facts(out_syms, [], [], never_defined & set(out_syms),
                      dict(stmt.annotations.get("loop_options") or {}))

    live_in = flow.live_in.get(stmt, set())
    state = sorted(modified & live_in, key=str)
    if stmt.kind == "For":
        var = QualifiedName((stmt.slots["var"].slots["id"],))
        state = [s for s in state if s != var]
    for symbol in state:
        if not symbol.is_simple:
            raise ConversionError(
                f"loop assigns compound name {symbol}; cannot functionalize",
                stmt.span, PASS)
    reads = set(act.agg_reads.get(stmt, set()))
    captures = sorted({s for s in reads - set(state)
                       if s in really_defined and s.is_simple}, key=str)
    if stmt.kind == "For":
        captures = [c for c in captures if c != var]
    return _Facts([], state, captures, never_defined & set(state),
                  dict(stmt.annotations.get("loop_options") or {}))


def _statements_within(stmt: AstNode):
    """All statement nodes inside a compound statement, itself included."""
    yield stmt
    blocks = []
    if stmt.kind == "If":
        blocks = [stmt.slots["body"], stmt.slots["orelse"]]
    elif stmt.kind in ("While", "For"):
        blocks = [stmt.slots["body"]]
    for block_node in blocks:
        for sub in block_node.slots["stmts"]:
            yield from _statements_within(sub)


def _result_return(symbols: list) -> AstNode:
    if not symbols:
        return return_stmt(nonelit())
    if len(symbols) == 1:
        return return_stmt(qn_expr(symbols[0]))
    return return_stmt(listlit([qn_expr(s) for s in symbols]))


def _undef_inits(symbols, origin) -> list:
    out = []
    for symbol in sorted(symbols, key=str):
        if symbol.is_simple:
            out.append(mark(assign(name(symbol.root),
                                   dispatch_call("undefined", [string(symbol.root)])),
                            origin))
    return out


def _bind_results(call: AstNode, symbols: list, tmp_name: str, origin) -> list:
    if not symbols:
        return [mark(expr_stmt(call), origin)]
    if len(symbols) == 1:
        return [mark(assign(qn_expr(symbols[0]), call), origin)]
    stmts = [assign(name(tmp_name), call)]
    for index, symbol in enumerate(symbols):
        sub = make("Subscript", None, value=name(tmp_name), index=intlit(index))
        stmts.append(assign(qn_expr(symbol), sub))
    return [mark(s, origin) for s in stmts]


def _symbol_list(symbols) -> AstNode:
    return listlit([string(str(s)) for s in symbols])


def _options_args(options: dict) -> list:
    max_it = options.get("max_iterations")
    args = [intlit(max_it) if max_it is not None else nonelit()]
    if options.get("parallel_hint") is not None:
        from .common import boollit
        args.append(boollit(options["parallel_hint"]))
    return args


def _convert_if(stmt, facts, body, orelse, ctx: PassContext) -> list:
    n = ctx.next_id()
    true_name, false_name = f"ag__if_true_{n}", f"ag__if_false_{n}"
    result = _result_return(facts.out_syms)
    true_fn = funcdef(true_name, [], body + [result])
    false_fn = funcdef(false_name, [], orelse + [_copy_stmt(result)])
    call = dispatch_call("if_stmt", [
        stmt.slots["test"], name(true_name), name(false_name),
        _symbol_list(facts.out_syms)])
    out = _undef_inits(facts.never_defined, stmt)
    out += [mark(true_fn, stmt), mark(false_fn, stmt)]
    out += _bind_results(call, facts.out_syms, f"ag__cond_{n}", stmt)
    return out


def _copy_stmt(stmt: AstNode) -> AstNode:
    from ..syntax.ast import copy_tree
    return copy_tree(stmt)


def _convert_while(stmt, facts, body, ctx: PassContext) -> list:
    n = ctx.next_id()
    test_name, body_name = f"ag__loop_test_{n}", f"ag__loop_body_{n}"
    params = [s.root for s in facts.state]
    test_fn = funcdef(test_name, params, [return_stmt(stmt.slots["test"])])
    body_fn = funcdef(body_name, params, body + [_result_return(facts.state)])
    call = dispatch_call("while_stmt", [
        name(test_name), name(body_name),
        listlit([qn_expr(s) for s in facts.state]),
        listlit([qn_expr(s) for s in facts.captures]),
        _symbol_list(facts.state)] + _options_args(facts.options))
    out = _undef_inits(facts.never_defined, stmt)
    out += [mark(test_fn, stmt), mark(body_fn, stmt)]
    out += _bind_results(call, facts.state, f"ag__loop_{n}", stmt)
    return out


def _convert_for(stmt, facts, body, ctx: PassContext) -> list:
    n = ctx.next_id()
    body_name = f"ag__for_body_{n}"
    var = stmt.slots["var"].slots["id"]
    params = [var] + [s.root for s in facts.state]
    body_fn = funcdef(body_name, params, body + [_result_return(facts.state)])
    call = dispatch_call("for_stmt", [
        stmt.slots["iter"], name(body_name),
        listlit([qn_expr(s) for s in facts.state]),
        listlit([qn_expr(s) for s in facts.captures]),
        _symbol_list(facts.state)] + _options_args(facts.options))
    out = _undef_inits(facts.never_defined, stmt)
    out += [mark(body_fn, stmt)]
    out += _bind_results(call, facts.state, f"ag__loop_{n}", stmt)
    return out
