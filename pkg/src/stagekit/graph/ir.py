"""The dataflow IR: nodes in topologically-ordered frames, nested subgraphs
for functional control flow, and a function table for re-entrant staged
functions.

References across frames are always routed through capture parameters, so
within any frame a node's inputs point only at earlier nodes of the same
frame or at that frame's own parameters.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

from ..errors import InternalError
from ..syntax.spans import SourceSpan, generated_span

OPS = frozenset({
    "Const", "Param", "Add", "Sub", "Mul", "Div", "Mod", "Neg",
    "Lt", "Gt", "Le", "Ge", "Eq", "Ne", "Not",
    "MatMul", "Transpose", "ReduceMax", "ReduceSum", "Where", "Tanh",
    "Sigmoid", "Shape", "Range", "Index", "Cond", "While",
    "ListNew", "ListAppend", "ListPop", "ListGet", "ListSet", "ListStack",
    "FuncCall", "Print", "Assert",
    "TreeIsEmpty", "TreeLeft", "TreeRight", "TreeValue",
})

BINOP_TO_OP = {"+": "Add", "-": "Sub", "*": "Mul", "/": "Div", "%": "Mod",
               "<": "Lt", ">": "Gt", "<=": "Le", ">=": "Ge",
               "==": "Eq", "!=": "Ne"}

_node_ids = itertools.count(1)


@dataclass(frozen=True)
class TypeSpec:
    dtype: str                       # i64 | f64 | bool | tree | list
    shape: Optional[tuple] = ()      # dims int|None; None entirely unknown
    elem: Optional["TypeSpec"] = None  # element type for lists

    def render(self) -> str:
        if self.dtype == "list":
            return f"list<{self.elem.render() if self.elem else '?'}>"
        if self.dtype == "tree":
            return "tree"
        dims = "" if self.shape == () else \
            "[" + ",".join("?" if d is None else str(d) for d in (self.shape or ())) + "]"
        return f"{self.dtype}{dims}"


TREE = TypeSpec("tree", None)


@dataclass(eq=False)
class Node:
    op: str
    inputs: list = field(default_factory=list)       # list[NodeRef]
    attrs: dict = field(default_factory=dict)
    origin: SourceSpan = field(default_factory=generated_span)
    out_types: list = field(default_factory=list)    # list[TypeSpec]
    frame: Optional["Subgraph"] = None
    uid: int = field(default_factory=lambda: next(_node_ids))

    def __post_init__(self):
        if self.op not in OPS:
            raise InternalError(f"unknown graph op {self.op!r}")

    def ref(self, out: int = 0) -> "NodeRef":
        return NodeRef(self, out)

    def __repr__(self):
        return f"<{self.op}#{self.uid}>"


@dataclass(frozen=True)
class NodeRef:
    node: Node
    out: int = 0

    @property
    def type(self) -> TypeSpec:
        return self.node.out_types[self.out]


@dataclass(eq=False)
class Subgraph:
    params: list = field(default_factory=list)   # Param nodes
    nodes: list = field(default_factory=list)    # non-param nodes, in order
    outputs: list = field(default_factory=list)  # list[NodeRef]
    # trace-time bookkeeping:
    parent: Optional["Subgraph"] = None
    closed: bool = False                         # function frames take no captures
    capture_memo: dict = field(default_factory=dict)   # outer NodeRef -> Param ref
    capture_sources: list = field(default_factory=list)  # outer refs, param order

    def add_param(self, name: str, spec: TypeSpec, origin=None) -> Node:
        node = Node("Param", [], {"name": name}, origin or generated_span(),
                    [spec], frame=self)
        self.params.append(node)
        return node

    def add(self, node: Node) -> Node:
        node.frame = self
        self.nodes.append(node)
        return node

    def all_nodes(self):
        return self.params + self.nodes


@dataclass(eq=False)
class GraphFunction:
    name: str
    body: Subgraph
    specialization_key: tuple

    @property
    def params(self):
        return self.body.params

    @property
    def n_outputs(self):
        return len(self.body.outputs)


@dataclass(eq=False)
class Graph:
    main: Subgraph = field(default_factory=Subgraph)
    functions: dict = field(default_factory=dict)  # name -> GraphFunction

    @property
    def outputs(self):
        return self.main.outputs

    def param_named(self, name: str) -> Node:
        for p in self.main.params:
            if p.attrs.get("name") == name:
                return p
        raise InternalError(f"no graph parameter named {name!r}")

    def count_ops(self, op: str) -> int:
        return sum(1 for _ in self.iter_nodes() if _.op == op)

    def node_count(self) -> int:
        return sum(1 for _ in self.iter_nodes())

    def iter_nodes(self):
        """All nodes in all frames, subgraphs and functions included."""
        seen = []

        def visit(sg: Subgraph):
            for node in sg.all_nodes():
                seen.append(node)
                for key in ("then_graph", "else_graph", "test_graph", "body_graph"):
                    sub = node.attrs.get(key)
                    if sub is not None:
                        visit(sub)

        visit(self.main)
        for fn in self.functions.values():
            visit(fn.body)
        return iter(seen)


def subgraphs_of(node: Node):
    for key in ("then_graph", "else_graph", "test_graph", "body_graph"):
        sub = node.attrs.get(key)
        if sub is not None:
            yield key, sub
