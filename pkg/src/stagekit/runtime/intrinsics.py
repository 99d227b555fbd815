"""The ``m.`` numeric intrinsics: execute on concrete tensors, or record the
corresponding graph node when any operand is staged."""

from __future__ import annotations

from ..errors import MslTypeError, ShapeMismatch
from ..graph import tensor
from ..graph.ir import TypeSpec
from ..graph.tensor import TensorValue
from .trace import unify_shapes
from .values import (MslList, RangeVal, Staged, check_defined, describe,
                     is_staged)


def _tensor_arg(v, span, what="operand"):
    check_defined(v, span)
    if isinstance(v, TensorValue):
        return v
    if isinstance(v, (bool, int, float)):
        return tensor.scalar(v)
    if isinstance(v, MslList):
        return tensor.constant(_unwrap_list(v, span))
    raise MslTypeError(f"{what} must be numeric, got {describe(v)}", span)


def _unwrap_list(v, span):
    out = []
    for item in v.items:
        check_defined(item, span)
        if isinstance(item, MslList):
            out.append(_unwrap_list(item, span))
        elif isinstance(item, (bool, int, float)):
            out.append(item)
        elif isinstance(item, TensorValue) and item.shape == ():
            out.append(item.item())
        else:
            raise MslTypeError(f"cannot build a constant from {describe(item)}",
                               span)
    return out


def _int_list(v, span, what):
    check_defined(v, span)
    if isinstance(v, MslList):
        values = []
        for item in v.items:
            if isinstance(item, bool) or not isinstance(item, int):
                raise MslTypeError(f"{what} must be a list of integers", span)
            values.append(item)
        return values
    raise MslTypeError(f"{what} must be a list of integers", span)


def _staged_in(args):
    for a in args:
        if isinstance(a, Staged):
            return a.ctx
    return None


def _unary(op_node, kernel, out_dtype=None):
    def impl(args, span):
        if len(args) != 1:
            raise MslTypeError(f"m.{op_node.lower()} takes one argument", span)
        (v,) = args
        ctx = _staged_in(args)
        if ctx is None:
            return kernel(_tensor_arg(v, span), span)
        staged = ctx.stage(v, span)
        if staged.type.dtype in ("tree", "list"):
            raise MslTypeError(f"m.{op_node.lower()} on {staged.type.render()}",
                               span)
        dtype = out_dtype or staged.type.dtype
        node = ctx.emit(op_node, [staged], {},
                        [TypeSpec(dtype, staged.type.shape)], span)
        return Staged(node.ref(0), ctx)
    return impl


def m_constant(args, span):
    if len(args) != 1:
        raise MslTypeError("m.constant takes one argument", span)
    if isinstance(args[0], Staged):
        return args[0]
    return _tensor_arg(args[0], span)


def m_zeros(args, span):
    if len(args) != 1:
        raise MslTypeError("m.zeros takes a shape list", span)
    return tensor.zeros(_int_list(args[0], span, "shape"))


def m_shape(args, span):
    if len(args) != 1:
        raise MslTypeError("m.shape takes one argument", span)
    (v,) = args
    if isinstance(v, Staged):
        shape = v.type.shape
        rank = len(shape) if shape is not None else None
        node = v.ctx.emit("Shape", [v], {}, [TypeSpec("i64", (rank,))], span)
        return Staged(node.ref(0), v.ctx)
    return tensor.shape_of(_tensor_arg(v, span))


def m_range(args, span):
    if len(args) != 1:
        raise MslTypeError("m.range takes one argument", span)
    (v,) = args
    if isinstance(v, Staged):
        if v.type.dtype != "i64" or v.type.shape != ():
            raise MslTypeError("m.range needs a scalar integer", span)
        node = v.ctx.emit("Range", [v], {}, [TypeSpec("i64", (None,))], span)
        return Staged(node.ref(0), v.ctx)
    check_defined(v, span)
    if isinstance(v, TensorValue) and v.dtype == "i64" and v.shape == ():
        v = v.item()
    if isinstance(v, bool) or not isinstance(v, int):
        raise MslTypeError(f"m.range needs an integer, got {describe(v)}", span)
    return tensor.arange(max(v, 0), span)


def m_transpose(args, span):
    if len(args) != 2:
        raise MslTypeError("m.transpose takes (tensor, permutation)", span)
    v, perm_arg = args
    perm = _int_list(perm_arg, span, "permutation")
    if isinstance(v, Staged):
        shape = v.type.shape
        if shape is None:
            out_shape = None
        else:
            if sorted(perm) != list(range(len(shape))):
                raise ShapeMismatch(f"bad permutation {perm} for {shape}", span)
            out_shape = tuple(shape[p] for p in perm)
        node = v.ctx.emit("Transpose", [v], {"perm": tuple(perm)},
                          [TypeSpec(v.type.dtype, out_shape)], span)
        return Staged(node.ref(0), v.ctx)
    return tensor.transpose(_tensor_arg(v, span), perm, span)


def m_matmul(args, span):
    if len(args) != 2:
        raise MslTypeError("m.matmul takes two arguments", span)
    a, b = args
    ctx = _staged_in(args)
    if ctx is None:
        return tensor.matmul(_tensor_arg(a, span), _tensor_arg(b, span), span)
    sa, sb = ctx.stage(a, span), ctx.stage(b, span)
    for s in (sa, sb):
        if s.type.dtype not in ("i64", "f64"):
            raise MslTypeError("m.matmul needs numeric tensors", span)
    shape_a, shape_b = sa.type.shape, sb.type.shape
    if shape_a is not None and shape_b is not None:
        if len(shape_a) != 2 or len(shape_b) != 2:
            raise ShapeMismatch("m.matmul needs rank-2 operands", span)
        if (shape_a[1] is not None and shape_b[0] is not None
                and shape_a[1] != shape_b[0]):
            raise ShapeMismatch(
                f"matmul inner dims differ: {shape_a} x {shape_b}", span)
        out_shape = (shape_a[0], shape_b[1])
    else:
        out_shape = None
    dtype = "f64" if "f64" in (sa.type.dtype, sb.type.dtype) else "i64"
    node = ctx.emit("MatMul", [sa, sb], {}, [TypeSpec(dtype, out_shape)], span)
    return Staged(node.ref(0), ctx)


def m_where(args, span):
    if len(args) != 3:
        raise MslTypeError("m.where takes (cond, a, b)", span)
    cond, a, b = args
    ctx = _staged_in(args)
    if ctx is None:
        return tensor.where(_tensor_arg(cond, span), _tensor_arg(a, span),
                            _tensor_arg(b, span), span)
    sc, sa, sb = (ctx.stage(x, span) for x in (cond, a, b))
    if sc.type.dtype != "bool":
        raise MslTypeError("m.where condition must be bool", span)
    if sa.type.dtype != sb.type.dtype:
        raise MslTypeError("m.where branches disagree on dtype", span)
    shape = unify_shapes(sa.type.shape, sb.type.shape)
    out_shape = tensor.where_shape(sc.type.shape or (), shape, span) \
        if sc.type.shape is not None and shape is not None else shape
    node = ctx.emit("Where", [sc, sa, sb], {},
                    [TypeSpec(sa.type.dtype, out_shape)], span)
    return Staged(node.ref(0), ctx)


def _reduce(op_node):
    def impl(args, span):
        if len(args) != 1:
            raise MslTypeError(f"m.{op_node.lower()} takes one argument", span)
        (v,) = args
        if isinstance(v, Staged):
            if v.type.dtype not in ("i64", "f64"):
                raise MslTypeError("reduction needs a numeric tensor", span)
            node = v.ctx.emit(op_node, [v], {}, [TypeSpec(v.type.dtype, ())],
                              span)
            return Staged(node.ref(0), v.ctx)
        kernel = tensor.reduce_sum if op_node == "ReduceSum" else tensor.reduce_max
        return kernel(_tensor_arg(v, span), span)
    return impl


INTRINSICS = {
    "constant": m_constant,
    "zeros": m_zeros,
    "shape": m_shape,
    "range": m_range,
    "transpose": m_transpose,
    "matmul": m_matmul,
    "reduce_max": _reduce("ReduceMax"),
    "reduce_sum": _reduce("ReduceSum"),
    "where": m_where,
    "tanh": _unary("Tanh", tensor.tanh, out_dtype="f64"),
    "sigmoid": _unary("Sigmoid", tensor.sigmoid, out_dtype="f64"),
}
