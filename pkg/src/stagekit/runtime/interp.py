"""Tree-walking evaluator for MSL.

The same evaluator runs three roles: native semantics for original programs,
native execution of converted programs (whose control flow arrives as
dispatch calls), and the host that drives tracing when converted code runs
with staged values.  Scoping is lexical: reads walk up the environment chain,
assignment always binds locally, and the for-loop variable is loop-scoped.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field

from ..errors import (AssertionFailed, InternalError, MslTypeError,
                      RecursionDepthExceeded, UndefinedSymbol)
from ..syntax.ast import AstNode, origin_of
from ..syntax.spans import SourceSpan
from . import dispatch
from .calls import converted_call
from .intrinsics import INTRINSICS
from .trace import current_span, set_current_span
from .values import (Builtin, Closure, MslList, Namespace, RangeVal, Staged,
                     TensorValue, UndefinedValue, as_host_bool, check_defined,
                     describe, format_value, is_staged)

sys.setrecursionlimit(20000)

_MAX_DEPTH = 256

_NOT_A_LIST = object()


class _Return(Exception):
    def __init__(self, value):
        self.value = value


class _Break(Exception):
    pass


class _Continue(Exception):
    pass


def _dtype_marker(name: str):
    def impl(args, span):
        raise MslTypeError(f"{name} is a dtype designator, not a function", span)
    return impl


class Env:
    __slots__ = ("vars", "parent")

    def __init__(self, parent=None):
        self.vars: dict = {}
        self.parent = parent

    def lookup(self, name: str, span=None):
        env = self
        while env is not None:
            if name in env.vars:
                return env.vars[name]
            env = env.parent
        raise UndefinedSymbol(name, span)

    def assign(self, name: str, value):
        self.vars[name] = value


class Interpreter:
    def __init__(self, module: AstNode, file_name: str = "<module>"):
        self.module = module
        self.file_name = file_name
        self.globals = Env()
        self.print_log: list[str] = []
        self.depth = 0
        self._install_builtins()
        self.run_module()

    # -- setup -------------------------------------------------------------

    def _install_builtins(self):
        self.globals.assign("print", Builtin("print", self._builtin_print))
        self.globals.assign("range", Builtin("range", self._builtin_range))
        self.globals.assign("len", Builtin("len", self._builtin_len))
        for dtype_name in ("float", "int", "bool"):
            # dtype designators; only directives look at them
            self.globals.assign(dtype_name, Builtin(dtype_name,
                                                    _dtype_marker(dtype_name)))
        self.globals.assign("m", Namespace("m", {
            name: Builtin(f"m.{name}", fn) for name, fn in INTRINSICS.items()}))
        self.globals.assign("ag", Namespace("ag", self._ag_members()))
        self.globals.assign("ag__", Namespace("ag__", self._dispatch_members()))

    def _builtin_print(self, args, span):
        return dispatch.print_value(args, self.print_log.append, span)

    def _builtin_range(self, args, span):
        if len(args) != 1:
            raise MslTypeError("range takes one argument", span)
        return INTRINSICS["range"](args, span)

    def _builtin_len(self, args, span):
        if len(args) != 1:
            raise MslTypeError("len takes one argument", span)
        (v,) = args
        check_defined(v, span)
        if isinstance(v, MslList):
            return len(v.items)
        if isinstance(v, RangeVal):
            return v.stop
        if isinstance(v, Staged):
            raise MslTypeError("len of a staged value is not supported", span)
        raise MslTypeError(f"len of {describe(v)}", span)

    def _ag_members(self):
        def stack(args, span):
            if len(args) != 1:
                raise MslTypeError("ag.stack takes one argument", span)
            return dispatch.list_stack(args[0], span=span)

        return {
            "set_loop_options": Builtin("ag.set_loop_options",
                                        lambda args, span: None),
            "set_element_type": Builtin("ag.set_element_type",
                                        lambda args, span: None),
            "stack": Builtin("ag.stack", stack),
        }

    def _dispatch_members(self):
        def wrap(name, fn):
            return Builtin(f"ag__.{name}", fn)

        def call_args(fn):
            return lambda args, span: fn(*args, span=span)

        members = {
            "if_stmt": wrap("if_stmt", call_args(dispatch.if_stmt)),
            "if_expr": wrap("if_expr", call_args(dispatch.if_expr)),
            "while_stmt": wrap("while_stmt", call_args(dispatch.while_stmt)),
            "for_stmt": wrap("for_stmt", call_args(dispatch.for_stmt)),
            "and_": wrap("and_", call_args(dispatch.and_)),
            "or_": wrap("or_", call_args(dispatch.or_)),
            "not_": wrap("not_", call_args(dispatch.not_)),
            "assert_stmt": wrap("assert_stmt", call_args(dispatch.assert_stmt)),
            "list_new": wrap("list_new", call_args(dispatch.list_new)),
            "list_append": wrap("list_append", call_args(dispatch.list_append)),
            "list_pop": wrap("list_pop", call_args(dispatch.list_pop)),
            "list_stack": wrap("list_stack", call_args(dispatch.list_stack)),
            "getitem": wrap("getitem", call_args(dispatch.getitem)),
            "setitem": wrap("setitem", call_args(dispatch.setitem)),
            "undefined": wrap("undefined",
                              lambda args, span: dispatch.undefined(args[0], span)),
            "fn_scope": wrap("fn_scope",
                             lambda args, span: dispatch.fn_scope(
                                 args[0], args[1], span)),
            "converted_call": wrap("converted_call",
                                   lambda args, span: converted_call(
                                       args[0], args[1:], span)),
        }
        for op in ("lt_", "gt_", "le_", "ge_", "eq_", "ne_"):
            symbol = {"lt_": "<", "gt_": ">", "le_": "<=", "ge_": ">=",
                      "eq_": "==", "ne_": "!="}[op]
            members[op] = wrap(op, (lambda s: lambda args, span:
                                    dispatch.binary(s, args[0], args[1], span))(symbol))
        return members

    # -- module and function execution ----------------------------------------

    def run_module(self):
        for stmt in self.module.slots["body"]:
            self.exec_stmt(stmt, self.globals)

    def call_function(self, name: str, args: list):
        fn = self.globals.lookup(name)
        if not isinstance(fn, Closure):
            raise MslTypeError(f"{name!r} is not a function")
        return self.call_closure(fn, args)

    def call_closure(self, closure: Closure, args: list):
        fn = closure.fn
        params = fn.slots["params"]
        if len(args) != len(params):
            raise MslTypeError(
                f"{closure.name}() takes {len(params)} arguments, got {len(args)}")
        if self.depth >= _MAX_DEPTH:
            raise RecursionDepthExceeded(
                f"call depth exceeded {_MAX_DEPTH} in native execution")
        env = Env(parent=closure.env)
        for param, value in zip(params, args):
            env.assign(param.slots["name"], value)
        self.depth += 1
        saved_span = current_span()
        try:
            for stmt in fn.slots["body"].slots["stmts"]:
                self.exec_stmt(stmt, env)
            return None
        except _Return as ret:
            return ret.value
        finally:
            self.depth -= 1
            set_current_span(saved_span)

    # -- statements ---------------------------------------------------------

    def exec_block(self, block: AstNode, env: Env):
        for stmt in block.slots["stmts"]:
            self.exec_stmt(stmt, env)

    def exec_stmt(self, stmt: AstNode, env: Env):
        span = origin_of(stmt)
        set_current_span(span)
        kind = stmt.kind
        if kind == "Assign":
            value = self.eval_expr(stmt.slots["value"], env)
            self.assign_target(stmt.slots["target"], value, env)
        elif kind == "AugAssign":
            current = self.eval_expr(stmt.slots["target"], env)
            value = self.eval_expr(stmt.slots["value"], env)
            result = dispatch.binary(stmt.slots["op"], current, value, span)
            self.assign_target(stmt.slots["target"], result, env)
        elif kind == "ExprStmt":
            self.eval_expr(stmt.slots["value"], env)
        elif kind == "Return":
            value = stmt.slots["value"]
            raise _Return(None if value is None else self.eval_expr(value, env))
        elif kind == "FunctionDef":
            env.assign(stmt.slots["name"], Closure(stmt, env, self))
        elif kind == "If":
            test = self.eval_expr(stmt.slots["test"], env)
            if as_host_bool(test, span):
                self.exec_block(stmt.slots["body"], env)
            else:
                self.exec_block(stmt.slots["orelse"], env)
        elif kind == "While":
            while True:
                test = self.eval_expr(stmt.slots["test"], env)
                if not as_host_bool(test, span):
                    break
                try:
                    self.exec_block(stmt.slots["body"], env)
                except _Break:
                    break
                except _Continue:
                    continue
        elif kind == "For":
            self.exec_for(stmt, env, span)
        elif kind == "Break":
            raise _Break()
        elif kind == "Continue":
            raise _Continue()
        elif kind == "Assert":
            test = self.eval_expr(stmt.slots["test"], env)
            if not as_host_bool(test, span, "assert condition"):
                msg = stmt.slots["msg"]
                text = "assertion failed" if msg is None else \
                    format_value(self.eval_expr(msg, env))
                raise AssertionFailed(text, span)
        else:
            raise InternalError(f"cannot execute statement kind {kind}", span)

    def exec_for(self, stmt: AstNode, env: Env, span):
        iterable = self.eval_expr(stmt.slots["iter"], env)
        if isinstance(iterable, Staged):
            raise InternalError(
                "staged value in native for loop; conversion should have "
                "routed this through dispatch", span)
        var = stmt.slots["var"].slots["id"]
        had_old = var in env.vars
        old = env.vars.get(var)
        try:
            for element in dispatch._concrete_items(iterable, span):
                env.assign(var, element)
                try:
                    self.exec_block(stmt.slots["body"], env)
                except _Break:
                    break
                except _Continue:
                    continue
        finally:
            # the iteration variable is loop-scoped
            if had_old:
                env.vars[var] = old
            elif var in env.vars:
                del env.vars[var]

    def assign_target(self, target: AstNode, value, env: Env):
        span = origin_of(target)
        if target.kind == "Name":
            env.assign(target.slots["id"], value)
            return
        if target.kind == "Subscript":
            base = self.eval_expr(target.slots["value"], env)
            index = self.eval_expr(target.slots["index"], env)
            updated = dispatch.setitem(base, index, value, span)
            self.assign_target(target.slots["value"], updated, env)
            return
        raise MslTypeError("only variables and list elements can be assigned",
                           span)

    # -- expressions -----------------------------------------------------------

    def eval_expr(self, expr: AstNode, env: Env):
        kind = expr.kind
        if kind == "Name":
            return env.lookup(expr.slots["id"], origin_of(expr))
        if kind == "IntLit" or kind == "FloatLit" or kind == "BoolLit":
            return expr.slots["value"]
        if kind == "NoneLit":
            return None
        if kind == "StrLit":
            return expr.slots["value"]
        if kind == "ListLiteral":
            return MslList([self.eval_expr(e, env)
                            for e in expr.slots["elements"]])
        if kind == "BinOp" or kind == "Compare":
            left = self.eval_expr(expr.slots["left"], env)
            right = self.eval_expr(expr.slots["right"], env)
            return dispatch.binary(expr.slots["op"], left, right,
                                   origin_of(expr))
        if kind == "UnaryOp":
            operand = self.eval_expr(expr.slots["operand"], env)
            if expr.slots["op"] == "-":
                return dispatch.negate(operand, origin_of(expr))
            return dispatch.not_(operand, origin_of(expr))
        if kind == "BoolOp":
            span = origin_of(expr)
            left = self.eval_expr(expr.slots["left"], env)
            thunk = lambda: self.eval_expr(expr.slots["right"], env)
            if expr.slots["op"] == "and":
                return dispatch.and_(left, thunk, span)
            return dispatch.or_(left, thunk, span)
        if kind == "Ternary":
            span = origin_of(expr)
            test = self.eval_expr(expr.slots["test"], env)
            if as_host_bool(test, span, "ternary condition"):
                return self.eval_expr(expr.slots["if_true"], env)
            return self.eval_expr(expr.slots["if_false"], env)
        if kind == "Subscript":
            base = self.eval_expr(expr.slots["value"], env)
            index = self.eval_expr(expr.slots["index"], env)
            return dispatch.getitem(base, index, origin_of(expr))
        if kind == "Attribute":
            return self.eval_attribute(expr, env)
        if kind == "Call":
            return self.eval_call(expr, env)
        raise InternalError(f"cannot evaluate expression kind {kind}",
                            origin_of(expr))

    def eval_list_method(self, expr: AstNode, func: AstNode, env: Env, span):
        """Native ``l.append(x)`` / ``l.pop()``: value semantics, rebinding
        the target exactly as the lists conversion pass would."""
        base = self.eval_expr(func.slots["value"], env)
        is_list = isinstance(base, MslList) or (
            isinstance(base, Staged) and base.type.dtype == "list")
        if not is_list:
            return _NOT_A_LIST
        args = [self.eval_expr(a, env) for a in expr.slots["args"]]
        if func.slots["attr"] == "append":
            if len(args) != 1:
                raise MslTypeError("append takes one argument", span)
            updated = dispatch.list_append(base, args[0], span)
            self.assign_target(func.slots["value"], updated, env)
            return None
        if args:
            raise MslTypeError("pop takes no arguments", span)
        pair = dispatch.list_pop(base, span)
        self.assign_target(func.slots["value"],
                           dispatch.getitem(pair, 0, span), env)
        return dispatch.getitem(pair, 1, span)

    def eval_attribute(self, expr: AstNode, env: Env):
        span = origin_of(expr)
        base = self.eval_expr(expr.slots["value"], env)
        attr = expr.slots["attr"]
        if isinstance(base, Namespace):
            member = base.members.get(attr)
            if member is None:
                raise MslTypeError(f"unknown member {base.name}.{attr}", span)
            return member
        from ..graph.tensor import Tree
        if isinstance(base, Tree):
            if attr == "is_empty":
                return base.is_empty
            if attr in ("left", "right"):
                return base.child(attr)
            if attr == "value":
                if base.is_empty:
                    raise MslTypeError("empty tree has no value", span)
                return base.value
            raise MslTypeError(f"tree has no attribute {attr!r}", span)
        if isinstance(base, Staged) and base.type.dtype == "tree":
            return self.staged_tree_attr(base, attr, span)
        check_defined(base, span)
        raise MslTypeError(f"{describe(base)} has no attribute {attr!r}", span)

    def staged_tree_attr(self, base: Staged, attr: str, span):
        from ..graph.ir import TREE, TypeSpec
        ctx = base.ctx
        table = {
            "is_empty": ("TreeIsEmpty", TypeSpec("bool", ())),
            "left": ("TreeLeft", TREE),
            "right": ("TreeRight", TREE),
            "value": ("TreeValue", TypeSpec("f64", ())),
        }
        if attr not in table:
            raise MslTypeError(f"tree has no attribute {attr!r}", span)
        op, spec = table[attr]
        node = ctx.emit(op, [base], {}, [spec], span)
        return Staged(node.ref(0), ctx)

    def eval_call(self, expr: AstNode, env: Env):
        span = origin_of(expr)
        func = expr.slots["func"]
        if func.kind == "Attribute" and func.slots["attr"] in ("append", "pop"):
            method_result = self.eval_list_method(expr, func, env, span)
            if method_result is not _NOT_A_LIST:
                return method_result
        callee = self.eval_expr(expr.slots["func"], env)
        args = [self.eval_expr(a, env) for a in expr.slots["args"]]
        if expr.slots["kw_names"]:
            # only reachable for un-converted ag directive calls, which the
            # native semantics treat as no-ops
            if not isinstance(callee, Builtin) or not callee.name.startswith("ag."):
                raise MslTypeError("unexpected keyword arguments", span)
        if isinstance(callee, Builtin):
            return callee.fn(args, span)
        if isinstance(callee, Closure):
            return self.call_closure(callee, args)
        if isinstance(callee, Staged):
            raise MslTypeError("staged values are not callable", span)
        check_defined(callee, span)
        raise MslTypeError(f"{describe(callee)} is not callable", span)
