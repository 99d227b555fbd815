from .execute import ExecutionResult, execute
from .ir import (BINOP_TO_OP, Graph, GraphFunction, Node, NodeRef, OPS,
                 Subgraph, TREE, TypeSpec)
from .tensor import ListValue, TensorValue, Tree, allclose, constant, scalar, zeros
from .validate import validate

__all__ = [
    "BINOP_TO_OP", "ExecutionResult", "Graph", "GraphFunction", "ListValue",
    "Node", "NodeRef", "OPS", "Subgraph", "TREE", "TensorValue", "Tree",
    "TypeSpec", "allclose", "constant", "execute", "scalar", "validate",
    "zeros",
]
