"""Dense tensor values and the kernel set used both by native evaluation of
numeric intrinsics and by graph execution.

Buffers are plain Python lists in row-major order: host ints stay exact
(no 64-bit wraparound) and float operations are ordinary C doubles applied in
a fixed order, so native and staged execution agree bit-for-bit.  Kernel
performance is explicitly out of scope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from ..errors import (DivisionByZero, DtypeMismatch, IndexOutOfRange,
                      MslTypeError, ShapeMismatch)

NUMERIC = ("i64", "f64")
DTYPES = ("i64", "f64", "bool")


@dataclass(frozen=True)
class TensorValue:
    dtype: str
    shape: tuple
    data: tuple

    def __post_init__(self):
        if self.dtype not in DTYPES:
            raise DtypeMismatch(f"bad dtype {self.dtype!r}")
        if len(self.data) != size_of(self.shape):
            raise ShapeMismatch(
                f"buffer of {len(self.data)} elements does not fill {self.shape}")

    @property
    def rank(self) -> int:
        return len(self.shape)

    def item(self):
        if self.shape != ():
            raise ShapeMismatch(f"item() on non-scalar shape {self.shape}")
        return self.data[0]

    def __str__(self):
        payload = ",".join(format_scalar(v) for v in self.data)
        dims = ",".join(str(d) for d in self.shape)
        return f"{self.dtype}[{dims}]:{payload}"


@dataclass(eq=False)
class Tree:
    """Host binary tree; the one opaque structured value MSL programs see."""
    value: Optional[float] = None
    left: Optional["Tree"] = None
    right: Optional["Tree"] = None

    @property
    def is_empty(self) -> bool:
        return self.value is None

    @staticmethod
    def empty() -> "Tree":
        return Tree()

    @staticmethod
    def node(value: float, left: "Tree" = None, right: "Tree" = None) -> "Tree":
        return Tree(float(value), left or Tree.empty(), right or Tree.empty())

    def child(self, side: str) -> "Tree":
        node = self.left if side == "left" else self.right
        if self.is_empty:
            raise MslTypeError(f"empty tree has no {side} child")
        return node if node is not None else Tree.empty()

    def __str__(self):
        if self.is_empty:
            return "()"
        return f"({format_scalar(self.value)} {self.left} {self.right})"


@dataclass(eq=False)
class ListValue:
    """Execution-time staged list: a growable sequence of tensors."""
    items: list
    elem_dtype: Optional[str] = None
    elem_shape: Optional[tuple] = None


def format_scalar(v) -> str:
    if isinstance(v, bool):
        return "True" if v else "False"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def size_of(shape: tuple) -> int:
    n = 1
    for d in shape:
        n *= d
    return n


def scalar(value) -> TensorValue:
    if isinstance(value, bool):
        return TensorValue("bool", (), (value,))
    if isinstance(value, int):
        return TensorValue("i64", (), (value,))
    if isinstance(value, float):
        return TensorValue("f64", (), (value,))
    raise MslTypeError(f"cannot make a tensor from {type(value).__name__}")


def constant(value) -> TensorValue:
    """Build a tensor from a host scalar or (nested) list of scalars."""
    if isinstance(value, TensorValue):
        return value
    if isinstance(value, (bool, int, float)):
        return scalar(value)
    if isinstance(value, (list, tuple)):
        shape, flat = _flatten(value)
        dtype = _unify_dtypes(flat)
        data = tuple(float(v) if dtype == "f64" else v for v in flat)
        return TensorValue(dtype, shape, data)
    raise MslTypeError(f"cannot make a tensor from {type(value).__name__}")


def _flatten(value):
    if not isinstance(value, (list, tuple)):
        return (), [value]
    if not value:
        raise ShapeMismatch("cannot build a tensor from an empty list")
    shapes_and_flats = [_flatten(v) for v in value]
    first = shapes_and_flats[0][0]
    if any(s != first for s, _ in shapes_and_flats):
        raise ShapeMismatch("ragged nested list")
    flat = [x for _, f in shapes_and_flats for x in f]
    return (len(value),) + first, flat


def _unify_dtypes(flat) -> str:
    kinds = {type(v) for v in flat}
    if kinds <= {bool}:
        return "bool"
    if kinds <= {int}:
        return "i64"
    if kinds <= {int, float}:
        return "f64"
    raise DtypeMismatch("mixed element types in tensor literal")


def zeros(shape, dtype: str = "f64") -> TensorValue:
    fill = 0.0 if dtype == "f64" else (False if dtype == "bool" else 0)
    return TensorValue(dtype, tuple(shape), tuple([fill] * size_of(tuple(shape))))


# --- shape algebra ----------------------------------------------------------

def broadcast_shapes(a: tuple, b: tuple, span=None) -> tuple:
    """Trailing-dimension alignment with size-1 stretch; None is dynamic."""
    out = []
    for i in range(max(len(a), len(b))):
        da = a[len(a) - 1 - i] if i < len(a) else 1
        db = b[len(b) - 1 - i] if i < len(b) else 1
        if da == 1:
            out.append(db)
        elif db == 1:
            out.append(da)
        elif da is None or db is None:
            if da is not None and db is not None and da != db:
                raise ShapeMismatch(f"cannot broadcast {a} with {b}", span)
            out.append(da if da is not None else db)
        elif da == db:
            out.append(da)
        else:
            raise ShapeMismatch(f"cannot broadcast {a} with {b}", span)
    out.reverse()
    return tuple(out)


def shapes_compatible(decl: tuple | None, actual: tuple | None) -> bool:
    if decl is None or actual is None:
        return True
    if len(decl) != len(actual):
        return False
    return all(d is None or a is None or d == a for d, a in zip(decl, actual))


def _strides(shape: tuple) -> tuple:
    strides = []
    acc = 1
    for d in reversed(shape):
        strides.append(acc)
        acc *= d
    return tuple(reversed(strides))


def _broadcast_index(idx, shape, strides, out_rank):
    offset = 0
    skip = out_rank - len(shape)
    for axis, d in enumerate(shape):
        i = idx[axis + skip]
        offset += (0 if d == 1 else i) * strides[axis]
    return offset


def _indices(shape: tuple):
    if not shape:
        yield ()
        return
    idx = [0] * len(shape)
    total = size_of(shape)
    for _ in range(total):
        yield tuple(idx)
        for axis in range(len(shape) - 1, -1, -1):
            idx[axis] += 1
            if idx[axis] < shape[axis]:
                break
            idx[axis] = 0


# --- scalar arithmetic shared with the host semantics ------------------------

def scalar_binop(op: str, a, b, span=None):
    if op in ("+", "-", "*", "/", "%"):
        if isinstance(a, bool) or isinstance(b, bool):
            raise MslTypeError(f"arithmetic on bool operand", span)
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            if b == 0:
                raise DivisionByZero("division by zero", span)
            return a / b
        if op == "%":
            if b == 0:
                raise DivisionByZero("modulo by zero", span)
            return a % b
    if op in ("<", ">", "<=", ">="):
        if isinstance(a, bool) or isinstance(b, bool):
            raise MslTypeError("ordering comparison on bool operand", span)
        return {"<": a < b, ">": a > b, "<=": a <= b, ">=": a >= b}[op]
    if op == "==":
        return a == b
    if op == "!=":
        return a != b
    raise MslTypeError(f"unknown operator {op}")


ARITH_OPS = ("+", "-", "*", "/", "%")
COMPARE_OPS = ("<", ">", "<=", ">=", "==", "!=")


def result_dtype(op: str, a: str, b: str, span=None) -> str:
    if op in COMPARE_OPS:
        if op in ("==", "!="):
            if (a == "bool") != (b == "bool"):
                raise DtypeMismatch(f"cannot compare {a} with {b}", span)
        else:
            if a == "bool" or b == "bool":
                raise DtypeMismatch("ordering comparison on bool operand", span)
        return "bool"
    if a == "bool" or b == "bool":
        raise DtypeMismatch("arithmetic on bool operand", span)
    if op == "/":
        return "f64"
    return "f64" if "f64" in (a, b) else "i64"


def binop(op: str, a: TensorValue, b: TensorValue, span=None) -> TensorValue:
    out_dtype = result_dtype(op, a.dtype, b.dtype, span)
    shape = broadcast_shapes(a.shape, b.shape, span)
    sa, sb = _strides(a.shape), _strides(b.shape)
    rank = len(shape)
    data = []
    for idx in _indices(shape):
        va = a.data[_broadcast_index(idx, a.shape, sa, rank)]
        vb = b.data[_broadcast_index(idx, b.shape, sb, rank)]
        value = scalar_binop(op, va, vb, span)
        if out_dtype == "f64" and not isinstance(value, float) and op not in COMPARE_OPS:
            value = float(value)
        data.append(value)
    return TensorValue(out_dtype, shape, tuple(data))


def neg(a: TensorValue, span=None) -> TensorValue:
    if a.dtype == "bool":
        raise DtypeMismatch("negation of bool tensor", span)
    return TensorValue(a.dtype, a.shape, tuple(-v for v in a.data))


def logical_not(a: TensorValue, span=None) -> TensorValue:
    if a.dtype != "bool":
        raise DtypeMismatch("'not' needs a bool operand", span)
    return TensorValue("bool", a.shape, tuple(not v for v in a.data))


def matmul(a: TensorValue, b: TensorValue, span=None) -> TensorValue:
    if a.rank != 2 or b.rank != 2:
        raise ShapeMismatch(f"matmul needs rank-2 operands, got {a.shape} x {b.shape}", span)
    if a.dtype == "bool" or b.dtype == "bool":
        raise DtypeMismatch("matmul on bool tensor", span)
    n, k = a.shape
    k2, m = b.shape
    if k != k2:
        raise ShapeMismatch(f"matmul inner dims differ: {a.shape} x {b.shape}", span)
    dtype = "f64" if "f64" in (a.dtype, b.dtype) else "i64"
    data = []
    for i in range(n):
        for j in range(m):
            acc = 0.0 if dtype == "f64" else 0
            for t in range(k):
                acc += a.data[i * k + t] * b.data[t * m + j]
            data.append(acc)
    return TensorValue(dtype, (n, m), tuple(data))


def transpose(a: TensorValue, perm, span=None) -> TensorValue:
    perm = tuple(perm)
    if sorted(perm) != list(range(a.rank)):
        raise ShapeMismatch(f"bad permutation {perm} for rank {a.rank}", span)
    shape = tuple(a.shape[p] for p in perm)
    src_strides = _strides(a.shape)
    data = [None] * len(a.data)
    for pos, idx in enumerate(_indices(shape)):
        src = sum(idx[axis] * src_strides[perm[axis]] for axis in range(len(perm)))
        data[pos] = a.data[src]
    return TensorValue(a.dtype, shape, tuple(data))


def reduce_sum(a: TensorValue, span=None) -> TensorValue:
    if a.dtype == "bool":
        raise DtypeMismatch("reduce_sum on bool tensor", span)
    acc = 0.0 if a.dtype == "f64" else 0
    for v in a.data:  # row-major, left-to-right: fixed accumulation order
        acc += v
    return TensorValue(a.dtype, (), (acc,))


def reduce_max(a: TensorValue, span=None) -> TensorValue:
    if a.dtype == "bool":
        raise DtypeMismatch("reduce_max on bool tensor", span)
    if not a.data:
        raise ShapeMismatch("reduce_max of empty tensor", span)
    best = a.data[0]
    for v in a.data[1:]:
        if v > best:
            best = v
    return TensorValue(a.dtype, (), (best,))


def where(cond: TensorValue, a: TensorValue, b: TensorValue, span=None) -> TensorValue:
    if cond.dtype != "bool":
        raise DtypeMismatch("where condition must be bool", span)
    if a.dtype != b.dtype:
        raise DtypeMismatch(f"where branches differ: {a.dtype} vs {b.dtype}", span)
    if a.shape != b.shape:
        raise ShapeMismatch(f"where branches differ: {a.shape} vs {b.shape}", span)
    if cond.shape == a.shape:
        data = tuple(x if c else y for c, x, y in zip(cond.data, a.data, b.data))
        return TensorValue(a.dtype, a.shape, data)
    if cond.shape == ():
        return a if cond.data[0] else b
    # rank-1 condition selects along the leading axis (row selection)
    if cond.rank == 1 and a.rank >= 1 and cond.shape[0] == a.shape[0]:
        row = size_of(a.shape[1:])
        data = []
        for i, c in enumerate(cond.data):
            src = a.data if c else b.data
            data.extend(src[i * row:(i + 1) * row])
        return TensorValue(a.dtype, a.shape, tuple(data))
    raise ShapeMismatch(
        f"where condition {cond.shape} does not match operands {a.shape}", span)


def where_shape(cond: tuple, a: tuple, span=None) -> tuple:
    if cond == a or cond == ():
        return a
    if len(cond) == 1 and len(a) >= 1 and (
            cond[0] is None or a[0] is None or cond[0] == a[0]):
        return a
    if None in cond or None in a:
        return a
    raise ShapeMismatch(f"where condition shape {cond} incompatible with {a}", span)


def tanh(a: TensorValue, span=None) -> TensorValue:
    if a.dtype == "bool":
        raise DtypeMismatch("tanh on bool tensor", span)
    return TensorValue("f64", a.shape, tuple(math.tanh(v) for v in a.data))


def sigmoid(a: TensorValue, span=None) -> TensorValue:
    if a.dtype == "bool":
        raise DtypeMismatch("sigmoid on bool tensor", span)
    return TensorValue("f64", a.shape, tuple(_sigmoid(v) for v in a.data))


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def shape_of(a: TensorValue) -> TensorValue:
    return TensorValue("i64", (a.rank,), tuple(a.shape))


def arange(n: int, span=None) -> TensorValue:
    if n < 0:
        raise ShapeMismatch(f"range of negative length {n}", span)
    return TensorValue("i64", (n,), tuple(range(n)))


def index(a: TensorValue, i: int, span=None) -> TensorValue:
    """Select along the leading axis."""
    if a.rank == 0:
        raise IndexOutOfRange("cannot index a scalar", span)
    n = a.shape[0]
    if not -n <= i < n:
        raise IndexOutOfRange(f"index {i} out of range for leading dim {n}", span)
    if i < 0:
        i += n
    row = size_of(a.shape[1:])
    return TensorValue(a.dtype, a.shape[1:], tuple(a.data[i * row:(i + 1) * row]))


def allclose(a: TensorValue, b: TensorValue, rel: float = 1e-9) -> bool:
    if a.dtype != b.dtype or a.shape != b.shape:
        return False
    for x, y in zip(a.data, b.data):
        if isinstance(x, float) or isinstance(y, float):
            if math.isnan(x) and math.isnan(y):
                continue
            if math.isinf(x) or math.isinf(y):
                if x != y:
                    return False
                continue
            if abs(x - y) > rel * max(1.0, abs(x), abs(y)):
                return False
        else:
            if x != y:
                return False
    return True
