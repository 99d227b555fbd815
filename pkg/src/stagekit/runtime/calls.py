"""Call dispatch: ``converted_call`` plus staged function definitions.

Under the graph backend user functions are inlined: the converted callee is
simply invoked under the active trace, with a depth limit because a recursive
function would inline forever.  Under the sexpr backend each call stages a
function definition once per specialization signature (argument dtypes and
shapes) and emits a FuncCall node; recursive self-calls during tracing
resolve to the in-progress definition, which is what makes recursive models
expressible.
"""

from __future__ import annotations

from ..errors import (InternalError, MslTypeError, RecursionDepthExceeded,
                      SignatureMismatch, UnknownCallee)
from ..graph.ir import GraphFunction, Subgraph, TypeSpec
from ..graph.tensor import TensorValue, Tree
from .trace import current_context, current_span
from .values import (Builtin, Closure, MslList, Staged, check_defined,
                     describe, is_staged)

_MAX_TYPE_ITERATIONS = 4


def converted_call(callee, args, span=None):
    span = span or current_span()
    check_defined(callee, span)
    if isinstance(callee, Builtin):
        return callee.fn(list(args), span)
    if isinstance(callee, Closure):
        ctx = current_context()
        if ctx is None or ctx.backend == "graph":
            return _inline_call(callee, args, span)
        return _staged_call(ctx, callee, args, span)
    if callable(callee):
        return callee(*args)
    raise UnknownCallee(f"cannot call {describe(callee)}", span)


def _inline_call(closure: Closure, args, span):
    ctx = current_context()
    if ctx is not None:
        if ctx.call_depth >= ctx.max_call_depth:
            raise RecursionDepthExceeded(
                f"function inlining exceeded depth {ctx.max_call_depth}; the "
                f"graph backend cannot stage re-entrant functions", span)
        ctx.call_depth += 1
        try:
            return closure.interp.call_closure(closure, list(args))
        finally:
            ctx.call_depth -= 1
    return closure.interp.call_closure(closure, list(args))


# --- sexpr backend: specialization and staged definitions ----------------------


def _signature_of(ctx, value, span):
    if isinstance(value, Staged):
        spec = value.type
    else:
        spec = _concrete_spec(value, span)
    if spec.dtype == "list":
        elem = spec.elem.render() if spec.elem else "?"
        return ("list", elem)
    return (spec.dtype, spec.shape)


def _concrete_spec(value, span) -> TypeSpec:
    check_defined(value, span)
    if isinstance(value, bool):
        return TypeSpec("bool", ())
    if isinstance(value, int):
        return TypeSpec("i64", ())
    if isinstance(value, float):
        return TypeSpec("f64", ())
    if isinstance(value, TensorValue):
        return TypeSpec(value.dtype, value.shape)
    if isinstance(value, Tree):
        raise MslTypeError(
            "cannot stage a concrete tree argument; pass trees as staged "
            "parameters", span)
    if isinstance(value, MslList):
        raise MslTypeError("cannot specialize on a concrete list argument", span)
    raise MslTypeError(f"cannot stage {describe(value)} argument", span)


def _staged_call(ctx, closure: Closure, args, span):
    staged_args = [ctx.stage(a, span) for a in args]
    key = (closure.fn.uid,
           tuple(_signature_of(ctx, a, span) for a in staged_args))
    fn = ctx.fn_cache.get(key)
    if fn is None:
        fn = _stage_function(ctx, closure, staged_args, key, span)
    return stage_call(ctx, fn, staged_args, span)


def _fresh_fn_name(ctx, base: str) -> str:
    name = base
    suffix = 2
    while name in ctx.fn_names:
        name = f"{base}_{suffix}"
        suffix += 1
    ctx.fn_names.add(name)
    return name


def _stage_function(ctx, closure: Closure, staged_args, key, span) -> GraphFunction:
    """Emit a definition once per specialization; the body may call the
    in-progress definition, whose output type is found by fixpoint iteration."""
    param_names = [p.slots["name"] for p in closure.fn.slots["params"]]
    if len(param_names) != len(staged_args):
        raise SignatureMismatch(
            f"{closure.name} expects {len(param_names)} arguments, "
            f"got {len(staged_args)}", span)
    name = _fresh_fn_name(ctx, closure.name)
    fn = GraphFunction(name, Subgraph(closed=True), key)
    # Recursive self-calls need an output type before the body exists; assume
    # scalar f64 and iterate until the traced body agrees with the assumption.
    fn.assumed_out = [TypeSpec("f64", ())]
    fn.in_progress = True
    ctx.fn_cache[key] = fn
    ctx.graph.functions[name] = fn

    body = None
    for _ in range(_MAX_TYPE_ITERATIONS):
        fn.self_calls_seen = False
        body = Subgraph(closed=True)
        with ctx.push_frame(body):
            params = [ctx.add_param(pname, arg.type)
                      for pname, arg in zip(param_names, staged_args)]
            result = closure.interp.call_closure(closure, params)
            staged_result = ctx.stage(result, span)
            body.outputs = [ctx.materialize(staged_result)]
        actual = [r.type for r in body.outputs]
        if not fn.self_calls_seen or actual == fn.assumed_out:
            fn.assumed_out = actual
            break
        fn.assumed_out = actual
    else:
        raise SignatureMismatch(
            f"return type of recursive function {closure.name!r} did not "
            f"stabilize", span)
    fn.body = body
    fn.in_progress = False
    return fn


def stage_call(ctx, fn: GraphFunction, staged_args, span=None):
    span = span or current_span()
    if getattr(fn, "in_progress", False):
        fn.self_calls_seen = True
        out_types = list(fn.assumed_out)
    else:
        if len(staged_args) != len(fn.body.params):
            raise SignatureMismatch(
                f"staged call to {fn.name} with {len(staged_args)} arguments; "
                f"definition has {len(fn.body.params)}", span)
        out_types = [r.type for r in fn.body.outputs]
    if len(out_types) != 1:
        raise InternalError("staged functions have exactly one output")
    node = ctx.emit("FuncCall", list(staged_args), {"fn_name": fn.name},
                    out_types, span)
    return Staged(node.ref(0), ctx)
