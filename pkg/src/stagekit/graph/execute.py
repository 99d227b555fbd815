"""Graph execution: deterministic evaluation of nodes in order, with
functional control flow (one branch per Cond, iterated While subgraphs) and
re-entrant function calls.  Failures carry the node's origin span."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import (DtypeMismatch, InternalError, IterationLimitExceeded,
                      RuntimeGraphError, ShapeMismatch, StagekitError)
from . import tensor
from .ir import Graph, Node, NodeRef, Subgraph
from .tensor import ListValue, TensorValue, Tree
from .validate import validate

_BIN_SYMBOL = {"Add": "+", "Sub": "-", "Mul": "*", "Div": "/", "Mod": "%",
               "Lt": "<", "Gt": ">", "Le": "<=", "Ge": ">=",
               "Eq": "==", "Ne": "!="}


@dataclass
class ExecutionResult:
    outputs: list
    print_log: list = field(default_factory=list)


def execute(graph: Graph, feeds: dict | None = None,
            check: bool = True) -> ExecutionResult:
    if check:
        validate(graph)
    feeds = feeds or {}
    bindings = _bind_feeds(graph, feeds)
    session = _Session(graph)
    env = session.run_subgraph(graph.main, bindings)
    outputs = [env[id(ref.node)][ref.out] for ref in graph.main.outputs]
    return ExecutionResult(outputs, session.print_log)


def _bind_feeds(graph: Graph, feeds: dict) -> list:
    values = []
    for param in graph.main.params:
        name = param.attrs.get("name")
        if name not in feeds:
            raise RuntimeGraphError(f"missing feed for parameter {name!r}",
                                    param.origin, "MissingFeed")
        value = feeds[name]
        spec = param.out_types[0]
        if spec.dtype == "tree":
            if not isinstance(value, Tree):
                raise RuntimeGraphError(f"feed {name!r} must be a tree",
                                        param.origin, "DtypeMismatch")
        else:
            if not isinstance(value, TensorValue):
                value = tensor.constant(value)
            if value.dtype != spec.dtype:
                raise RuntimeGraphError(
                    f"feed {name!r} has dtype {value.dtype}, parameter wants "
                    f"{spec.dtype}", param.origin, "DtypeMismatch")
            if spec.shape is not None and not tensor.shapes_compatible(
                    spec.shape, value.shape):
                raise RuntimeGraphError(
                    f"feed {name!r} has shape {list(value.shape)}, parameter "
                    f"wants {spec.render()}", param.origin, "ShapeMismatch")
        values.append(value)
    return values


class _Session:
    def __init__(self, graph: Graph):
        self.graph = graph
        self.print_log: list[str] = []

    def run_subgraph(self, sg: Subgraph, param_values: list) -> dict:
        if len(param_values) != len(sg.params):
            raise InternalError("subgraph invoked with wrong parameter count")
        env: dict = {}
        for param, value in zip(sg.params, param_values):
            env[id(param)] = (value,)
        for node in sg.nodes:
            env[id(node)] = self.eval_node(node, env)
        return env

    def outputs_of(self, sg: Subgraph, env: dict) -> list:
        return [env[id(ref.node)][ref.out] for ref in sg.outputs]

    def eval_node(self, node: Node, env: dict) -> tuple:
        try:
            return self._eval(node, env)
        except RuntimeGraphError:
            raise
        except StagekitError as exc:
            raise RuntimeGraphError(exc.message, exc.span or node.origin,
                                    type(exc).__name__) from exc

    def _inputs(self, node: Node, env: dict) -> list:
        return [env[id(ref.node)][ref.out] for ref in node.inputs]

    def _eval(self, node: Node, env: dict) -> tuple:
        op = node.op
        span = node.origin

        if op == "Const":
            return (node.attrs["value"],)
        if op == "Param":
            raise InternalError("parameter evaluated as a node")

        ins = self._inputs(node, env)

        if op in _BIN_SYMBOL:
            return (tensor.binop(_BIN_SYMBOL[op], ins[0], ins[1], span),)
        if op == "Neg":
            return (tensor.neg(ins[0], span),)
        if op == "Not":
            return (tensor.logical_not(ins[0], span),)
        if op == "MatMul":
            return (tensor.matmul(ins[0], ins[1], span),)
        if op == "Transpose":
            return (tensor.transpose(ins[0], node.attrs["perm"], span),)
        if op == "ReduceSum":
            return (tensor.reduce_sum(ins[0], span),)
        if op == "ReduceMax":
            return (tensor.reduce_max(ins[0], span),)
        if op == "Where":
            return (tensor.where(ins[0], ins[1], ins[2], span),)
        if op == "Tanh":
            return (tensor.tanh(ins[0], span),)
        if op == "Sigmoid":
            return (tensor.sigmoid(ins[0], span),)
        if op == "Shape":
            return (tensor.shape_of(ins[0]),)
        if op == "Range":
            return (tensor.arange(ins[0].item(), span),)
        if op == "Index":
            return (tensor.index(ins[0], ins[1].item(), span),)

        if op == "TreeIsEmpty":
            return (tensor.scalar(ins[0].is_empty),)
        if op == "TreeLeft":
            return (ins[0].child("left"),)
        if op == "TreeRight":
            return (ins[0].child("right"),)
        if op == "TreeValue":
            if ins[0].is_empty:
                raise RuntimeGraphError("empty tree has no value", span,
                                        "MslTypeError")
            return (tensor.scalar(ins[0].value),)

        if op == "ListNew":
            spec = node.out_types[0]
            return (ListValue(list(ins),
                              spec.elem.dtype if spec.elem else None,
                              spec.elem.shape if spec.elem else None),)
        if op == "ListAppend":
            lst, item = ins
            return (ListValue(lst.items + [item], lst.elem_dtype,
                              lst.elem_shape),)
        if op == "ListPop":
            lst = ins[0]
            if not lst.items:
                raise RuntimeGraphError("pop from an empty list", span,
                                        "EmptyPop")
            return (ListValue(lst.items[:-1], lst.elem_dtype, lst.elem_shape),
                    lst.items[-1])
        if op == "ListGet":
            lst, idx = ins
            return (_list_at(lst, idx.item(), span),)
        if op == "ListSet":
            lst, idx, value = ins
            i = _list_index(lst, idx.item(), span)
            items = list(lst.items)
            items[i] = value
            return (ListValue(items, lst.elem_dtype, lst.elem_shape),)
        if op == "ListStack":
            lst = ins[0]
            if not lst.items:
                raise RuntimeGraphError("stack of an empty list", span,
                                        "EmptyPop")
            first = lst.items[0]
            for item in lst.items[1:]:
                if item.dtype != first.dtype or item.shape != first.shape:
                    raise RuntimeGraphError("stack of mismatched elements",
                                            span, "ShapeMismatch")
            data = tuple(x for item in lst.items for x in item.data)
            return (TensorValue(first.dtype, (len(lst.items),) + first.shape,
                                data),)

        if op == "Cond":
            return self._eval_cond(node, ins)
        if op == "While":
            return self._eval_while(node, ins)
        if op == "FuncCall":
            fn = self.graph.functions[node.attrs["fn_name"]]
            fn_env = self.run_subgraph(fn.body, ins)
            return tuple(self.outputs_of(fn.body, fn_env))
        if op == "Print":
            self.print_log.append(" ".join(_format(v) for v in ins))
            return ()
        if op == "Assert":
            if not ins[0].item():
                message = node.attrs.get("message") or "assertion failed"
                raise RuntimeGraphError(message, span, "AssertionFailed")
            return ()
        raise InternalError(f"cannot execute op {op}")

    def _eval_cond(self, node: Node, ins: list) -> tuple:
        n_then = node.attrs["n_then_caps"]
        pred = ins[0]
        then_caps = ins[1:1 + n_then]
        else_caps = ins[1 + n_then:]
        if pred.item():
            sg = node.attrs["then_graph"]
            env = self.run_subgraph(sg, then_caps)
        else:
            sg = node.attrs["else_graph"]
            env = self.run_subgraph(sg, else_caps)
        return tuple(self.outputs_of(sg, env))

    def _eval_while(self, node: Node, ins: list) -> tuple:
        n_state = node.attrs["n_state"]
        n_test = node.attrs["n_test_caps"]
        test_sg = node.attrs["test_graph"]
        body_sg = node.attrs["body_graph"]
        state = list(ins[:n_state])
        test_caps = ins[n_state:n_state + n_test]
        body_caps = ins[n_state + n_test:]
        limit = node.attrs.get("max_iterations")
        iterations = 0
        while True:
            test_env = self.run_subgraph(test_sg, state + list(test_caps))
            if not self.outputs_of(test_sg, test_env)[0].item():
                break
            if limit is not None and iterations >= limit:
                raise IterationLimitExceeded(
                    f"loop exceeded max_iterations={limit}", node.origin)
            iterations += 1
            body_env = self.run_subgraph(body_sg, state + list(body_caps))
            state = self.outputs_of(body_sg, body_env)
        return tuple(state)


def _list_index(lst: ListValue, i: int, span) -> int:
    n = len(lst.items)
    if not -n <= i < n:
        raise RuntimeGraphError(
            f"index {i} out of range for list of {n}", span, "IndexOutOfRange")
    return i + n if i < 0 else i


def _list_at(lst: ListValue, i: int, span):
    return lst.items[_list_index(lst, i, span)]


def _format(v) -> str:
    if isinstance(v, TensorValue):
        if v.shape == ():
            return tensor.format_scalar(v.item())
        return str(v)
    return str(v)
