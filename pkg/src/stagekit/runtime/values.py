"""Runtime values.

Concrete values are plain host objects: int, float, bool, str, None,
``MslList``, ``Tree``, ``TensorValue``, the ``UndefinedValue`` sentinel,
closures and builtins.  The only wrapper type is ``Staged``, a reference into
the graph being traced; everything else executes immediately.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..errors import MslTypeError, UndefinedSymbol
from ..graph.ir import NodeRef, TypeSpec
from ..graph.tensor import ListValue, TensorValue, Tree, format_scalar


@dataclass(eq=False)
class Staged:
    ref: NodeRef
    ctx: object  # TraceContext

    @property
    def type(self) -> TypeSpec:
        return self.ref.type

    def __repr__(self):
        return f"<staged {self.type.render()}>"


@dataclass(eq=False)
class MslList:
    """The language-level list: value semantics, optional declared element
    dtype (from ``ag.set_element_type``)."""
    items: list
    elem_dtype: Optional[str] = None

    def __len__(self):
        return len(self.items)


@dataclass(frozen=True)
class UndefinedValue:
    symbol: str

    def __repr__(self):
        return f"<undefined {self.symbol}>"


@dataclass(eq=False)
class Closure:
    fn: object           # FunctionDef node
    env: object          # defining Env
    interp: object       # owning Interpreter

    @property
    def name(self) -> str:
        return self.fn.slots["name"]

    @property
    def is_converted(self) -> bool:
        return bool(self.fn.annotations.get("converted"))


@dataclass(eq=False)
class Builtin:
    name: str
    fn: object  # callable(args: list, span) -> value


@dataclass(frozen=True)
class RangeVal:
    stop: int


class Namespace:
    def __init__(self, name: str, members: dict):
        self.name = name
        self.members = members


def is_staged(v) -> bool:
    return isinstance(v, Staged)


def contains_staged(v) -> bool:
    if isinstance(v, Staged):
        return True
    if isinstance(v, MslList):
        return any(contains_staged(x) for x in v.items)
    return False


def check_defined(v, span=None):
    if isinstance(v, UndefinedValue):
        raise UndefinedSymbol(v.symbol, span)
    return v


def as_host_bool(v, span=None, what: str = "condition") -> bool:
    check_defined(v, span)
    if isinstance(v, bool):
        return v
    if isinstance(v, TensorValue) and v.dtype == "bool" and v.shape == ():
        return v.item()
    if isinstance(v, Staged):
        from ..errors import InternalError
        raise InternalError(
            f"staged value used as a native {what}; conversion should have "
            f"routed this through dispatch", span)
    raise MslTypeError(f"{what} must be a bool, got {describe(v)}", span)


def describe(v) -> str:
    if v is None:
        return "None"
    if isinstance(v, bool):
        return "bool"
    if isinstance(v, int):
        return "int"
    if isinstance(v, float):
        return "float"
    if isinstance(v, str):
        return "string"
    if isinstance(v, TensorValue):
        return f"tensor {v.dtype}{list(v.shape)}"
    if isinstance(v, MslList):
        return "list"
    if isinstance(v, Tree):
        return "tree"
    if isinstance(v, UndefinedValue):
        return f"undefined '{v.symbol}'"
    if isinstance(v, Staged):
        return f"staged {v.type.render()}"
    if isinstance(v, Closure):
        return f"function {v.name!r}"
    if isinstance(v, (Builtin,)):
        return f"builtin {v.name!r}"
    if isinstance(v, RangeVal):
        return f"range({v.stop})"
    return type(v).__name__


def format_value(v) -> str:
    """Deterministic display form, shared by print and the CLI."""
    if v is None:
        return "None"
    if isinstance(v, (bool, int, float)):
        return format_scalar(v)
    if isinstance(v, str):
        return v
    if isinstance(v, TensorValue):
        if v.shape == ():
            return format_scalar(v.item())
        return str(v)
    if isinstance(v, MslList):
        return "[" + ", ".join(format_value(x) for x in v.items) + "]"
    if isinstance(v, Tree):
        return str(v)
    if isinstance(v, RangeVal):
        return f"range({v.stop})"
    return describe(v)
