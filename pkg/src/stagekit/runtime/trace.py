"""Trace contexts: the active staging session.

One context per thread at most.  The context owns the graph under
construction and a stack of frames (cond branches, loop bodies, staged
function bodies).  Staged values referencing an outer frame are routed into
the current frame through capture parameters; function frames are closed and
refuse captures.
"""

from __future__ import annotations

import threading
from contextlib import contextmanager
from dataclasses import dataclass, field

from ..errors import ContextError, ElementTypeUnset, InternalError, MslTypeError
from ..graph import tensor
from ..graph.ir import Graph, Node, NodeRef, Subgraph, TypeSpec
from ..syntax.spans import SourceSpan, generated_span
from .values import (MslList, Staged, UndefinedValue, check_defined,
                     describe, is_staged)

_tls = threading.local()


def current_context():
    return getattr(_tls, "ctx", None)


def current_span() -> SourceSpan:
    span = getattr(_tls, "span", None)
    return span or generated_span()


def set_current_span(span) -> None:
    _tls.span = span


@dataclass(eq=False)
class TraceContext:
    graph: Graph = field(default_factory=Graph)
    backend: str = "graph"
    frame_stack: list = field(default_factory=list)
    fn_cache: dict = field(default_factory=dict)  # specialization key -> GraphFunction
    fn_names: set = field(default_factory=set)
    call_depth: int = 0
    max_call_depth: int = 64
    scope_stack: list = field(default_factory=list)

    def __post_init__(self):
        if not self.frame_stack:
            self.frame_stack.append(self.graph.main)

    @property
    def frame(self) -> Subgraph:
        return self.frame_stack[-1]

    @contextmanager
    def push_frame(self, frame: Subgraph):
        self.frame_stack.append(frame)
        try:
            yield frame
        finally:
            self.frame_stack.pop()

    # -- building ---------------------------------------------------------

    def emit(self, op: str, inputs: list, attrs: dict, out_types: list,
             span: SourceSpan | None = None) -> Node:
        refs = [self.materialize(r) for r in inputs]
        node = Node(op, refs, attrs, span or current_span(), list(out_types))
        if self.scope_stack:
            node.attrs.setdefault("scope", "/".join(self.scope_stack))
        self.frame.add(node)
        return node

    def materialize(self, ref_or_staged) -> NodeRef:
        ref = ref_or_staged.ref if isinstance(ref_or_staged, Staged) else ref_or_staged
        return self._route(self.frame, ref)

    def _route(self, frame: Subgraph, ref: NodeRef) -> NodeRef:
        if ref.node.frame is frame:
            return ref
        if frame.parent is None:
            raise ContextError(
                "staged value used outside the trace context that created it")
        outer = self._route(frame.parent, ref)
        if frame.closed:
            raise InternalError(
                "staged function body captured a value from an outer frame")
        if outer in frame.capture_memo:
            return frame.capture_memo[outer]
        param = frame.add_param(f"cap{len(frame.capture_sources)}", outer.type,
                                origin=outer.node.origin)
        param.attrs["capture"] = True
        frame.capture_sources.append(outer)
        pref = param.ref(0)
        frame.capture_memo[outer] = pref
        return pref

    def add_param(self, name: str, spec: TypeSpec) -> Staged:
        node = self.frame.add_param(name, spec)
        return Staged(node.ref(0), self)

    def const(self, value: tensor.TensorValue, span=None) -> Staged:
        node = self.emit("Const", [], {"value": value},
                         [TypeSpec(value.dtype, value.shape)], span)
        return Staged(node.ref(0), self)

    # -- boxing concrete values into the trace ------------------------------

    def stage(self, v, span=None) -> Staged:
        span = span or current_span()
        if isinstance(v, Staged):
            if v.ctx is not self:
                raise ContextError(
                    "staged value belongs to a different trace context", span)
            return v
        check_defined(v, span)
        if isinstance(v, (bool, int, float)):
            return self.const(tensor.scalar(v), span)
        if isinstance(v, tensor.TensorValue):
            return self.const(v, span)
        if isinstance(v, MslList):
            return self.stage_list(v, span)
        raise MslTypeError(f"cannot stage a {describe(v)} value", span)

    def stage_list(self, lst: MslList, span=None) -> Staged:
        elem_specs = []
        elem_refs = []
        for item in lst.items:
            staged = self.stage(item, span)
            if staged.type.dtype in ("list", "tree"):
                raise MslTypeError("nested staged lists are not supported", span)
            elem_specs.append(staged.type)
            elem_refs.append(staged)
        if elem_specs:
            elem = elem_specs[0]
            for other in elem_specs[1:]:
                elem = unify_elem(elem, other, span)
        elif lst.elem_dtype is not None:
            elem = TypeSpec(lst.elem_dtype, None)
        else:
            raise ElementTypeUnset(
                "staging an empty list with no declared element type; "
                "annotate it with ag.set_element_type", span)
        if lst.elem_dtype is not None and lst.elem_dtype != elem.dtype:
            raise MslTypeError(
                f"list annotated {lst.elem_dtype} holds {elem.dtype} elements",
                span)
        node = self.emit("ListNew", elem_refs, {},
                         [TypeSpec("list", None, elem)], span)
        return Staged(node.ref(0), self)


def unify_elem(a: TypeSpec, b: TypeSpec, span=None) -> TypeSpec:
    if a.dtype != b.dtype:
        raise MslTypeError(
            f"list elements disagree on dtype: {a.dtype} vs {b.dtype}", span)
    return TypeSpec(a.dtype, unify_shapes(a.shape, b.shape))


def unify_shapes(a, b):
    if a is None or b is None:
        return None
    if len(a) != len(b):
        return None
    return tuple(da if da == db else None for da, db in zip(a, b))


@contextmanager
def tracing(ctx: TraceContext):
    if current_context() is not None:
        raise ContextError("a trace context is already active on this thread")
    _tls.ctx = ctx
    try:
        yield ctx
    finally:
        _tls.ctx = None
