"""The overloadable operations the converted code calls.

Every operation decides per call whether to execute natively or to record
graph nodes: a conditional on a concrete bool runs one branch immediately,
a conditional on a staged value traces both branches into a Cond node.  Loops
dispatch on their state and registered captures, never by pre-evaluating the
test.
"""

from __future__ import annotations

from ..errors import (AssertionFailed, BranchMismatch, ElementTypeUnset,
                      EmptyPop, IndexOutOfRange, InternalError,
                      IterationLimitExceeded, LoopVariantType, MslTypeError,
                      NonBooleanTest, NotIterable, StagekitError,
                      UndefinedBranchOutput, UndefinedSymbol)
from ..graph import tensor
from ..graph.ir import BINOP_TO_OP, Subgraph, TypeSpec
from ..graph.tensor import ListValue, TensorValue, Tree
from .trace import TraceContext, current_context, current_span, unify_elem, unify_shapes
from .values import (Builtin, Closure, MslList, RangeVal, Staged,
                     UndefinedValue, as_host_bool, check_defined,
                     contains_staged, describe, format_value, is_staged)


def call_thunk(fn, args=()):
    if isinstance(fn, Closure):
        return fn.interp.call_closure(fn, list(args))
    if callable(fn):
        return fn(*args)
    raise MslTypeError(f"{describe(fn)} is not callable", current_span())


def _staged_operands(*values):
    for v in values:
        if isinstance(v, Staged):
            return v.ctx
    return None


# --- arithmetic and comparisons ---------------------------------------------


def binary(op: str, a, b, span=None):
    span = span or current_span()
    check_defined(a, span)
    check_defined(b, span)
    ctx = _staged_operands(a, b)
    if ctx is not None:
        return _staged_binary(ctx, op, a, b, span)
    if a is None or b is None:
        if op == "==":
            return a is None and b is None
        if op == "!=":
            return not (a is None and b is None)
        raise MslTypeError(f"operator {op!r} on None operand", span)
    if isinstance(a, TensorValue) or isinstance(b, TensorValue):
        ta = a if isinstance(a, TensorValue) else tensor.scalar(_require_scalar(a, op, span))
        tb = b if isinstance(b, TensorValue) else tensor.scalar(_require_scalar(b, op, span))
        return tensor.binop(op, ta, tb, span)
    if isinstance(a, (bool, int, float)) and isinstance(b, (bool, int, float)):
        if op in ("==", "!=") and isinstance(a, bool) != isinstance(b, bool):
            raise MslTypeError("equality between bool and number", span)
        return tensor.scalar_binop(op, a, b, span)
    if op in ("==", "!="):
        same = type(a) is type(b) and a == b if isinstance(a, str) else None
        if isinstance(a, str) and isinstance(b, str):
            return (a == b) if op == "==" else (a != b)
    raise MslTypeError(
        f"operator {op!r} on {describe(a)} and {describe(b)}", span)


def _require_scalar(v, op, span):
    if isinstance(v, (bool, int, float)):
        return v
    raise MslTypeError(f"operator {op!r} on {describe(v)} operand", span)


def _staged_binary(ctx: TraceContext, op: str, a, b, span):
    sa, sb = ctx.stage(a, span), ctx.stage(b, span)
    for s in (sa, sb):
        if s.type.dtype in ("tree", "list"):
            raise MslTypeError(f"operator {op!r} on {s.type.render()} operand", span)
    dtype = tensor.result_dtype(op, sa.type.dtype, sb.type.dtype, span)
    shape = tensor.broadcast_shapes(sa.type.shape, sb.type.shape, span)
    node = ctx.emit(BINOP_TO_OP[op], [sa, sb], {}, [TypeSpec(dtype, shape)], span)
    return Staged(node.ref(0), ctx)


def negate(v, span=None):
    span = span or current_span()
    check_defined(v, span)
    if isinstance(v, Staged):
        if v.type.dtype not in ("i64", "f64"):
            raise MslTypeError(f"negation of {v.type.render()}", span)
        node = v.ctx.emit("Neg", [v], {}, [v.type], span)
        return Staged(node.ref(0), v.ctx)
    if isinstance(v, bool):
        raise MslTypeError("negation of bool", span)
    if isinstance(v, (int, float)):
        return -v
    if isinstance(v, TensorValue):
        return tensor.neg(v, span)
    raise MslTypeError(f"negation of {describe(v)}", span)


def not_(v, span=None):
    span = span or current_span()
    check_defined(v, span)
    if isinstance(v, Staged):
        if v.type.dtype != "bool":
            raise MslTypeError(f"'not' on staged {v.type.dtype}", span)
        node = v.ctx.emit("Not", [v], {}, [v.type], span)
        return Staged(node.ref(0), v.ctx)
    return not as_host_bool(v, span, "'not' operand")


def and_(lhs, rhs_thunk, span=None):
    return _lazy_bool("and", lhs, rhs_thunk, span or current_span())


def or_(lhs, rhs_thunk, span=None):
    return _lazy_bool("or", lhs, rhs_thunk, span or current_span())


def _lazy_bool(op: str, lhs, rhs_thunk, span):
    check_defined(lhs, span)
    if isinstance(lhs, Staged):
        if lhs.type.dtype != "bool" or lhs.type.shape != ():
            raise MslTypeError(f"staged {op!r} needs a scalar bool", span)
        # cond(x, y, x) / cond(x, x, y): Python's lazy boolean semantics
        if op == "and":
            return _staged_cond(lhs.ctx, lhs, lambda: rhs_thunk_value(rhs_thunk, span),
                                lambda: lhs, ["<bool>"], span)
        return _staged_cond(lhs.ctx, lhs, lambda: lhs,
                            lambda: rhs_thunk_value(rhs_thunk, span), ["<bool>"], span)
    value = as_host_bool(lhs, span, f"{op!r} operand")
    if (op == "and" and not value) or (op == "or" and value):
        return value
    rhs = rhs_thunk_value(rhs_thunk, span)
    if isinstance(rhs, Staged):
        if rhs.type.dtype != "bool":
            raise MslTypeError(f"{op!r} operand must be bool", span)
        return rhs
    as_host_bool(rhs, span, f"{op!r} operand")
    return rhs


def rhs_thunk_value(thunk, span):
    value = call_thunk(thunk)
    check_defined(value, span)
    return value


# --- conditionals -------------------------------------------------------------

def if_stmt(cond, body, orelse, out_symbols, span=None):
    span = span or current_span()
    check_defined(cond, span)
    symbols = [str(s) for s in _as_items(out_symbols, span, "output symbols")]
    if isinstance(cond, Staged):
        if cond.type.dtype != "bool" or cond.type.shape != ():
            raise NonBooleanTest(
                f"staged conditional needs a scalar bool, got {cond.type.render()}",
                span)
        return _staged_cond(cond.ctx, cond, body, orelse, symbols, span)
    taken = body if as_host_bool(cond, span) else orelse
    return call_thunk(taken)


def if_expr(cond, true_thunk, false_thunk, span=None):
    span = span or current_span()
    check_defined(cond, span)
    if isinstance(cond, Staged):
        if cond.type.dtype != "bool" or cond.type.shape != ():
            raise NonBooleanTest("staged ternary needs a scalar bool", span)
        return _staged_cond(cond.ctx, cond, true_thunk, false_thunk,
                            ["<value>"], span)
    taken = true_thunk if as_host_bool(cond, span) else false_thunk
    value = call_thunk(taken)
    return value


def _normalize_outputs(result, n: int, span, what: str):
    if n == 0:
        if result is not None:
            raise BranchMismatch(f"{what} should return nothing", span)
        return []
    if n == 1:
        return [result]
    if isinstance(result, MslList) and len(result.items) == n:
        return list(result.items)
    raise BranchMismatch(f"{what} must produce {n} values", span)


def _trace_thunk(ctx: TraceContext, thunk, param_specs, out_symbols, span,
                 args_builder=None):
    """Trace a thunk in a fresh frame; returns (frame, out_specs)."""
    frame = Subgraph(parent=ctx.frame)
    with ctx.push_frame(frame):
        params = [ctx.add_param(name, spec) for name, spec in param_specs]
        args = args_builder(params) if args_builder else params
        result = call_thunk(thunk, args)
        values = _normalize_outputs(result, len(out_symbols), span, "staged branch")
        out_refs = []
        for symbol, value in zip(out_symbols, values):
            if isinstance(value, UndefinedValue):
                raise UndefinedBranchOutput(symbol, span)
            # outer values passed through become captures of this frame
            out_refs.append(ctx.materialize(ctx.stage(value, span)))
        frame.outputs = out_refs
    return frame, [r.type for r in out_refs]


def _unify_branch_types(then_t, else_t, out_symbols, span):
    unified = []
    for spec_a, spec_b, symbol in zip(then_t, else_t, out_symbols):
        if spec_a.dtype != spec_b.dtype:
            raise BranchMismatch(
                f"branches disagree on dtype of {symbol!r}: "
                f"{spec_a.render()} vs {spec_b.render()}", span)
        if spec_a.dtype == "list":
            unified.append(TypeSpec("list", None,
                                    unify_elem(spec_a.elem, spec_b.elem, span)))
        elif spec_a.dtype == "tree":
            unified.append(spec_a)
        else:
            unified.append(TypeSpec(spec_a.dtype,
                                    unify_shapes(spec_a.shape, spec_b.shape)))
    return unified


def _staged_cond(ctx, cond, body, orelse, out_symbols, span):
    then_frame, then_t = _trace_thunk(ctx, body, [], out_symbols, span)
    else_frame, else_t = _trace_thunk(ctx, orelse, [], out_symbols, span)
    out_types = _unify_branch_types(then_t, else_t, out_symbols, span)
    inputs = [cond] + then_frame.capture_sources + else_frame.capture_sources
    node = ctx.emit("Cond", inputs, {
        "then_graph": then_frame,
        "else_graph": else_frame,
        "n_then_caps": len(then_frame.capture_sources),
        "n_else_caps": len(else_frame.capture_sources),
        "out_symbols": list(out_symbols),
    }, out_types, span)
    return _pack_outputs(ctx, node, len(out_symbols))


def _pack_outputs(ctx, node, n):
    if n == 0:
        return None
    if n == 1:
        return Staged(node.ref(0), ctx)
    return MslList([Staged(node.ref(i), ctx) for i in range(n)])


# --- loops --------------------------------------------------------------------

def _as_items(v, span, what):
    if v is None:
        return []
    if isinstance(v, MslList):
        return list(v.items)
    if isinstance(v, (list, tuple)):
        return list(v)
    raise InternalError(f"{what} must be a list", span)


def _name_list(v, span, n_state: int) -> list:
    items = _as_items(v, span, "symbol names") if v is not None else []
    if not items:
        return [f"s{i}" for i in range(n_state)]
    return [str(x) for x in items]


def while_stmt(test, body, init, captures=None, names=None, max_iterations=None,
               parallel_hint=None, span=None):
    span = span or current_span()
    state = _as_items(init, span, "loop state")
    caps = _as_items(captures, span, "loop captures")
    names = _name_list(names, span, len(state))
    staged = any(contains_staged(v) for v in state + caps)
    if staged:
        ctx = next(v.ctx for v in (state + caps) if isinstance(v, Staged)) \
            if any(isinstance(v, Staged) for v in state + caps) \
            else _find_ctx_in_lists(state + caps)
        return _staged_while(ctx, test, body, state, names, max_iterations,
                             parallel_hint, span)

    iterations = 0
    while True:
        t = call_thunk(test, state)
        if isinstance(t, Staged):
            raise InternalError(
                "loop test became staged without staged state or captures; "
                "the transform must register captured symbols", span)
        if not as_host_bool(t, span, "loop test"):
            break
        if max_iterations is not None and iterations >= max_iterations:
            raise IterationLimitExceeded(
                f"loop exceeded max_iterations={max_iterations}", span)
        iterations += 1
        result = call_thunk(body, state)
        state = _normalize_outputs(result, len(state), span, "loop body")
    return _pack_state(state)


def _find_ctx_in_lists(values):
    for v in values:
        if isinstance(v, MslList):
            for item in v.items:
                if isinstance(item, Staged):
                    return item.ctx
        if isinstance(v, Staged):
            return v.ctx
    raise InternalError("no trace context found among staged values")


def _pack_state(state):
    if not state:
        return None
    if len(state) == 1:
        return state[0]
    return MslList(list(state))


def _staged_while(ctx: TraceContext, test, body, state, names, max_iterations,
                  parallel_hint, span):
    init_refs = []
    specs = []
    for name, value in zip(names, state):
        if isinstance(value, UndefinedValue):
            raise UndefinedSymbol(name, span)
        if value is None:
            # a nullable loop slot has no staged type; this commonly means an
            # early return inside a loop of a function that may fall through
            raise MslTypeError(
                f"loop variable {name!r} is None when the loop is staged; "
                f"every path into a staged loop must give it a value", span)
        staged = ctx.stage(value, span)
        init_refs.append(staged)
        specs.append(staged.type)

    param_specs = list(zip(names, specs))
    test_frame, test_t = _trace_thunk(ctx, test, param_specs, ["<test>"], span)
    if test_t[0].dtype != "bool" or test_t[0].shape != ():
        raise NonBooleanTest(
            f"loop test must be a scalar bool, got {test_t[0].render()}", span)

    body_frame, body_t = _trace_thunk(ctx, body, param_specs, names, span)
    out_specs = []
    for name, decl, actual in zip(names, specs, body_t):
        if decl.dtype != actual.dtype:
            raise LoopVariantType(
                f"loop variable {name!r} changes dtype: "
                f"{decl.render()} -> {actual.render()}", span)
        if decl.dtype == "list":
            # empty-list slots learn their element type from the body
            if decl.elem is None or decl.elem.shape is None:
                elem = actual.elem or decl.elem
            elif actual.elem is not None and decl.elem.dtype != actual.elem.dtype:
                raise LoopVariantType(
                    f"loop list {name!r} changes element dtype", span)
            else:
                elem = decl.elem
            out_specs.append(TypeSpec("list", None, elem))
        elif decl.dtype == "tree":
            out_specs.append(decl)
        else:
            if not tensor.shapes_compatible(decl.shape, actual.shape):
                raise LoopVariantType(
                    f"loop variable {name!r} changes shape: "
                    f"{decl.render()} -> {actual.render()}", span)
            out_specs.append(TypeSpec(decl.dtype,
                                      unify_shapes(decl.shape, actual.shape)))

    inputs = init_refs + test_frame.capture_sources + body_frame.capture_sources
    node = ctx.emit("While", inputs, {
        "test_graph": test_frame,
        "body_graph": body_frame,
        "n_state": len(state),
        "n_test_caps": len(test_frame.capture_sources),
        "n_body_caps": len(body_frame.capture_sources),
        "names": list(names),
        "max_iterations": max_iterations,
        "parallel_hint": parallel_hint,
    }, out_specs, span)
    return _pack_outputs(ctx, node, len(state))


def for_stmt(iterable, body, init, captures=None, names=None, max_iterations=None,
             parallel_hint=None, span=None):
    span = span or current_span()
    check_defined(iterable, span)
    state = _as_items(init, span, "loop state")
    names = _name_list(names, span, len(state))

    if isinstance(iterable, Staged):
        return _staged_for(iterable.ctx, iterable, body, state, captures, names,
                           max_iterations, parallel_hint, span)

    items = _concrete_items(iterable, span)
    iterations = 0
    for element in items:
        if max_iterations is not None and iterations >= max_iterations:
            raise IterationLimitExceeded(
                f"loop exceeded max_iterations={max_iterations}", span)
        iterations += 1
        result = call_thunk(body, [element] + state)
        state = _normalize_outputs(result, len(state), span, "loop body")
    return _pack_state(state)


def _concrete_items(iterable, span):
    if isinstance(iterable, MslList):
        return list(iterable.items)
    if isinstance(iterable, RangeVal):
        return list(range(iterable.stop))
    if isinstance(iterable, TensorValue):
        if iterable.rank == 0:
            raise NotIterable("cannot iterate a scalar", span)
        if iterable.rank == 1:
            return list(iterable.data)
        return [tensor.index(iterable, i, span) for i in range(iterable.shape[0])]
    raise NotIterable(f"cannot iterate {describe(iterable)}", span)


def _staged_for(ctx, iterable, body, state, captures, names, max_iterations,
                parallel_hint, span):
    it_type = iterable.type
    if it_type.dtype == "list":
        raise NotIterable("cannot iterate a staged list", span)
    if it_type.dtype == "tree" or it_type.shape == ():
        raise NotIterable(f"cannot iterate {it_type.render()}", span)

    if iterable.ref.node.op == "Range":
        bound = Staged(iterable.ref.node.inputs[0], ctx)
        element_of = lambda i: i
    else:
        if it_type.shape is not None and len(it_type.shape) == 0:
            raise NotIterable("cannot iterate a scalar", span)
        shape_node = ctx.emit("Shape", [iterable], {},
                              [TypeSpec("i64", (len(it_type.shape or ()) or None,))],
                              span)
        zero = ctx.const(tensor.scalar(0), span)
        bound_node = ctx.emit("Index", [Staged(shape_node.ref(0), ctx), zero], {},
                              [TypeSpec("i64", ())], span)
        bound = Staged(bound_node.ref(0), ctx)
        element_of = lambda i: getitem(iterable, i, span)

    index_name = "<idx>"

    def loop_test(*loop_state):
        return binary("<", loop_state[0], bound, span)

    def loop_body(*loop_state):
        element = element_of(loop_state[0])
        result = call_thunk(body, [element] + list(loop_state[1:]))
        new_state = _normalize_outputs(result, len(state), span, "loop body")
        next_index = binary("+", loop_state[0], 1, span)
        return MslList([next_index] + new_state)

    zero_index = ctx.const(tensor.scalar(0), span)
    packed = while_stmt(loop_test, loop_body, [zero_index] + state,
                        captures=[iterable], names=[index_name] + names,
                        max_iterations=max_iterations,
                        parallel_hint=parallel_hint, span=span)
    items = _normalize_outputs(packed, len(state) + 1, span, "loop result")
    return _pack_state(items[1:])


# --- list operations -----------------------------------------------------------

def list_new(elements=None, elem_dtype=None, span=None):
    span = span or current_span()
    items = _as_items(elements, span, "list literal") if elements is not None else []
    return MslList(list(items), elem_dtype)


def list_append(lst, value, span=None):
    span = span or current_span()
    check_defined(lst, span)
    if isinstance(lst, MslList):
        return MslList(lst.items + [value], lst.elem_dtype)
    if isinstance(lst, Staged) and lst.type.dtype == "list":
        ctx = lst.ctx
        staged_value = ctx.stage(value, span)
        elem = lst.type.elem
        if elem is not None and elem.dtype != staged_value.type.dtype:
            raise MslTypeError(
                f"appending {staged_value.type.render()} to a list of "
                f"{elem.render()}", span)
        new_elem = unify_elem(elem, staged_value.type, span) if elem is not None \
            else staged_value.type
        node = ctx.emit("ListAppend", [lst, staged_value], {},
                        [TypeSpec("list", None, new_elem)], span)
        return Staged(node.ref(0), ctx)
    raise MslTypeError(f"append on {describe(lst)}", span)


def list_pop(lst, span=None):
    span = span or current_span()
    check_defined(lst, span)
    if isinstance(lst, MslList):
        if not lst.items:
            raise EmptyPop("pop from an empty list", span)
        return MslList([MslList(lst.items[:-1], lst.elem_dtype), lst.items[-1]])
    if isinstance(lst, Staged) and lst.type.dtype == "list":
        ctx = lst.ctx
        elem = lst.type.elem
        if elem is None:
            raise ElementTypeUnset("pop from a staged list with unknown element "
                                   "type", span)
        node = ctx.emit("ListPop", [lst], {},
                        [TypeSpec("list", None, elem), elem], span)
        return MslList([Staged(node.ref(0), ctx), Staged(node.ref(1), ctx)])
    raise MslTypeError(f"pop on {describe(lst)}", span)


def list_stack(lst, elem_dtype=None, span=None):
    span = span or current_span()
    check_defined(lst, span)
    if elem_dtype is not None and isinstance(lst, MslList) \
            and lst.elem_dtype is None:
        lst = MslList(lst.items, elem_dtype)
    if isinstance(lst, MslList):
        if contains_staged(lst):
            ctx = _find_ctx_in_lists([lst])
            return list_stack(ctx.stage_list(lst, span), span=span)
        if not lst.items:
            raise EmptyPop("stack of an empty list", span)
        tensors = [tensor.constant(v) if not isinstance(v, TensorValue) else v
                   for v in (check_defined(i, span) for i in lst.items)]
        first = tensors[0]
        for t in tensors[1:]:
            if t.dtype != first.dtype or t.shape != first.shape:
                raise MslTypeError("stack of mismatched elements", span)
        data = tuple(x for t in tensors for x in t.data)
        return TensorValue(first.dtype, (len(tensors),) + first.shape, data)
    if isinstance(lst, Staged) and lst.type.dtype == "list":
        ctx = lst.ctx
        elem = lst.type.elem
        if elem is None or elem.dtype is None:
            raise ElementTypeUnset(
                "stacking a staged list with unknown element type", span)
        length = _static_list_length(lst.ref)
        out_shape = (length,) + elem.shape if elem.shape is not None else None
        node = ctx.emit("ListStack", [lst], {},
                        [TypeSpec(elem.dtype, out_shape)], span)
        return Staged(node.ref(0), ctx)
    raise MslTypeError(f"stack on {describe(lst)}", span)


def _static_list_length(ref):
    """Element count when the list is a same-frame ListNew/ListAppend chain;
    None once it crosses a loop or branch boundary."""
    count = 0
    node = ref.node
    while node.op == "ListAppend":
        count += 1
        node = node.inputs[0].node
    if node.op == "ListNew":
        return count + len(node.inputs)
    return None


# --- item access ----------------------------------------------------------------

def _host_index(i, span):
    if isinstance(i, bool) or not isinstance(i, int):
        if isinstance(i, TensorValue) and i.dtype == "i64" and i.shape == ():
            return i.item()
        raise MslTypeError(f"index must be an integer, got {describe(i)}", span)
    return i


def getitem(container, index, span=None):
    span = span or current_span()
    check_defined(container, span)
    check_defined(index, span)
    if isinstance(container, MslList):
        if isinstance(index, Staged):
            return getitem(index.ctx.stage_list(container, span), index, span)
        i = _host_index(index, span)
        if not -len(container.items) <= i < len(container.items):
            raise IndexOutOfRange(
                f"index {i} out of range for list of {len(container.items)}", span)
        return container.items[i]
    if isinstance(container, TensorValue):
        if isinstance(index, Staged):
            ctx = index.ctx
            return getitem(ctx.stage(container, span), index, span)
        return tensor.index(container, _host_index(index, span), span)
    if isinstance(container, Staged):
        ctx = container.ctx
        staged_index = ctx.stage(index, span)
        if staged_index.type.dtype != "i64" or staged_index.type.shape != ():
            raise MslTypeError("staged index must be a scalar i64", span)
        if container.type.dtype == "list":
            elem = container.type.elem
            if elem is None:
                raise ElementTypeUnset(
                    "indexing a staged list with unknown element type", span)
            node = ctx.emit("ListGet", [container, staged_index], {}, [elem], span)
            return Staged(node.ref(0), ctx)
        if container.type.dtype == "tree":
            raise MslTypeError("cannot index a tree", span)
        shape = container.type.shape
        if shape == ():
            raise IndexOutOfRange("cannot index a scalar", span)
        out_shape = shape[1:] if shape is not None else None
        node = ctx.emit("Index", [container, staged_index], {},
                        [TypeSpec(container.type.dtype, out_shape)], span)
        return Staged(node.ref(0), ctx)
    raise MslTypeError(f"cannot index {describe(container)}", span)


def setitem(container, index, value, span=None):
    span = span or current_span()
    check_defined(container, span)
    check_defined(index, span)
    if isinstance(container, MslList):
        if isinstance(index, Staged):
            ctx = index.ctx
            return setitem(ctx.stage_list(container, span), index, value, span)
        i = _host_index(index, span)
        if not -len(container.items) <= i < len(container.items):
            raise IndexOutOfRange(
                f"index {i} out of range for list of {len(container.items)}", span)
        items = list(container.items)
        items[i] = value
        return MslList(items, container.elem_dtype)
    if isinstance(container, TensorValue):
        if isinstance(index, Staged) or isinstance(value, Staged):
            raise MslTypeError(
                "staged element assignment on tensors is not supported", span)
        i = _host_index(index, span)
        if container.rank == 0:
            raise IndexOutOfRange("cannot assign into a scalar", span)
        n = container.shape[0]
        if not -n <= i < n:
            raise IndexOutOfRange(f"index {i} out of range for dim {n}", span)
        if i < 0:
            i += n
        row = tensor.size_of(container.shape[1:])
        sub = value if isinstance(value, TensorValue) else tensor.constant(value)
        if sub.shape != container.shape[1:] or sub.dtype != container.dtype:
            raise MslTypeError("element assignment changes dtype or shape", span)
        data = list(container.data)
        data[i * row:(i + 1) * row] = sub.data
        return TensorValue(container.dtype, container.shape, tuple(data))
    if isinstance(container, Staged) and container.type.dtype == "list":
        ctx = container.ctx
        staged_index = ctx.stage(index, span)
        staged_value = ctx.stage(value, span)
        elem = container.type.elem
        if elem is not None and elem.dtype != staged_value.type.dtype:
            raise MslTypeError("element assignment changes list dtype", span)
        node = ctx.emit("ListSet", [container, staged_index, staged_value], {},
                        [container.type], span)
        return Staged(node.ref(0), ctx)
    raise MslTypeError(f"cannot assign into {describe(container)}", span)


# --- asserts, prints, scopes ------------------------------------------------

def assert_stmt(cond, msg=None, span=None):
    span = span or current_span()
    check_defined(cond, span)
    if isinstance(cond, Staged):
        ctx = cond.ctx
        if cond.type.dtype != "bool" or cond.type.shape != ():
            raise NonBooleanTest("staged assert needs a scalar bool", span)
        text = None if msg is None else (
            msg if isinstance(msg, str) else format_value(msg))
        ctx.emit("Assert", [cond], {"message": text}, [], span)
        return None
    if not as_host_bool(cond, span, "assert condition"):
        text = "assertion failed" if msg is None else \
            (msg if isinstance(msg, str) else format_value(msg))
        raise AssertionFailed(text, span)
    return None


def print_value(args, sink, span=None):
    """Print dispatch: stages a Print node whenever a trace is active so the
    effect happens at graph run time, once per execution."""
    span = span or current_span()
    ctx = current_context()
    for a in args:
        check_defined(a, span)
    if ctx is not None:
        staged = [ctx.stage(a, span) for a in args]
        ctx.emit("Print", staged, {}, [], span)
        return None
    sink(" ".join(format_value(a) for a in args))
    return None


def fn_scope(name, thunk, span=None):
    """Function wrapper runtime: named trace scope plus error spans that
    point at the user's original line."""
    span = span or current_span()
    ctx = current_context()
    if ctx is not None:
        ctx.scope_stack.append(name)
    try:
        return call_thunk(thunk)
    except StagekitError as exc:
        if exc.span is None or exc.span.is_generated:
            exc.span = span
        raise
    finally:
        if ctx is not None:
            ctx.scope_stack.pop()


def undefined(symbol, span=None):
    return UndefinedValue(symbol)
