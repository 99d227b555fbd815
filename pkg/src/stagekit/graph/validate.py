"""Structural and type validation of a graph: topological input rule,
subgraph signature rules per op, and dtype consistency."""

from __future__ import annotations

from ..errors import ValidationError
from .ir import Graph, Node, NodeRef, Subgraph, TypeSpec
from .tensor import shapes_compatible

_NUMERIC = ("i64", "f64")

_FIXED_ARITY = {
    "Const": 0, "Param": 0,
    "Add": 2, "Sub": 2, "Mul": 2, "Div": 2, "Mod": 2,
    "Lt": 2, "Gt": 2, "Le": 2, "Ge": 2, "Eq": 2, "Ne": 2,
    "Neg": 1, "Not": 1, "MatMul": 2, "Transpose": 1,
    "ReduceMax": 1, "ReduceSum": 1, "Where": 3, "Tanh": 1, "Sigmoid": 1,
    "Shape": 1, "Range": 1, "Index": 2,
    "ListAppend": 2, "ListPop": 1, "ListGet": 2, "ListSet": 3, "ListStack": 1,
    "Assert": 1,
    "TreeIsEmpty": 1, "TreeLeft": 1, "TreeRight": 1, "TreeValue": 1,
}


def validate(graph: Graph, raise_on_error: bool = True) -> list:
    report: list[str] = []
    _check_subgraph(graph, graph.main, "main", report)
    for name, fn in graph.functions.items():
        _check_subgraph(graph, fn.body, f"function {name}", report)
        if len(fn.body.outputs) != 1:
            report.append(f"function {name} must have exactly one output")
    if report and raise_on_error:
        raise ValidationError(report)
    return report


def _check_subgraph(graph: Graph, sg: Subgraph, where: str, report: list):
    seen = set()
    for param in sg.params:
        if param.op != "Param":
            report.append(f"{where}: non-Param node in parameter list")
        seen.add(id(param))
    for node in sg.nodes:
        for ref in node.inputs:
            if not isinstance(ref, NodeRef):
                report.append(f"{where}: {node} has a non-reference input")
                continue
            if ref.node.frame is not sg:
                report.append(f"{where}: {node} reads from another frame")
            elif id(ref.node) not in seen:
                report.append(f"{where}: {node} reads a later node")
            elif ref.out >= len(ref.node.out_types):
                report.append(f"{where}: {node} reads missing output "
                              f"{ref.out} of {ref.node}")
        _check_node(graph, node, where, report)
        seen.add(id(node))
    for ref in sg.outputs:
        if ref.node.frame is not sg or id(ref.node) not in seen:
            report.append(f"{where}: output references a foreign node")


def _check_node(graph: Graph, node: Node, where: str, report: list):
    op = node.op
    arity = _FIXED_ARITY.get(op)
    if arity is not None and len(node.inputs) != arity:
        report.append(f"{where}: {op} expects {arity} inputs, "
                      f"has {len(node.inputs)}")
        return
    ins = [r.type for r in node.inputs if isinstance(r, NodeRef)
           if r.out < len(r.node.out_types)]
    if len(ins) != len(node.inputs):
        return  # structural problem already reported

    def want(index, dtypes, label):
        if index < len(ins) and ins[index].dtype not in dtypes:
            report.append(f"{where}: {op} {label} has dtype "
                          f"{ins[index].dtype}, expects {'/'.join(dtypes)}")

    if op in ("Add", "Sub", "Mul", "Div", "Mod", "Lt", "Gt", "Le", "Ge",
              "MatMul", "Neg", "ReduceMax", "ReduceSum", "Tanh", "Sigmoid"):
        for i in range(len(node.inputs)):
            want(i, _NUMERIC, f"operand {i}")
    elif op in ("Eq", "Ne"):
        if ins[0].dtype != ins[1].dtype and {ins[0].dtype, ins[1].dtype} - {
                "i64", "f64"}:
            report.append(f"{where}: {op} compares {ins[0].dtype} with "
                          f"{ins[1].dtype}")
    elif op == "Not":
        want(0, ("bool",), "operand")
    elif op == "Where":
        want(0, ("bool",), "condition")
        if ins[1].dtype != ins[2].dtype:
            report.append(f"{where}: Where branches disagree on dtype")
    elif op == "Range":
        want(0, ("i64",), "length")
    elif op == "Index":
        want(1, ("i64",), "index")
    elif op in ("TreeIsEmpty", "TreeLeft", "TreeRight", "TreeValue"):
        want(0, ("tree",), "operand")
    elif op in ("ListAppend", "ListPop", "ListGet", "ListSet", "ListStack"):
        want(0, ("list",), "list operand")
    elif op == "Cond":
        _check_cond(graph, node, where, report)
    elif op == "While":
        _check_while(graph, node, where, report)
    elif op == "FuncCall":
        _check_call(graph, node, where, report)


def _signatures_match(a: list, b: list) -> bool:
    if len(a) != len(b):
        return False
    for sa, sb in zip(a, b):
        if sa.dtype != sb.dtype:
            return False
        if sa.dtype in _NUMERIC + ("bool",) and not shapes_compatible(
                sa.shape, sb.shape):
            return False
    return True


def _check_cond(graph: Graph, node: Node, where: str, report: list):
    then_sg, else_sg = node.attrs.get("then_graph"), node.attrs.get("else_graph")
    if then_sg is None or else_sg is None:
        report.append(f"{where}: Cond is missing branch subgraphs")
        return
    if node.inputs and node.inputs[0].type.dtype != "bool":
        report.append(f"{where}: Cond predicate is not bool")
    then_t = [r.type for r in then_sg.outputs]
    else_t = [r.type for r in else_sg.outputs]
    if not _signatures_match(then_t, else_t):
        report.append(f"{where}: Cond branch signatures differ "
                      f"({[t.render() for t in then_t]} vs "
                      f"{[t.render() for t in else_t]})")
    if len(then_t) != len(node.out_types):
        report.append(f"{where}: Cond arity mismatch with node outputs")
    want = 1 + node.attrs.get("n_then_caps", 0) + node.attrs.get("n_else_caps", 0)
    if len(node.inputs) != want:
        report.append(f"{where}: Cond capture inputs mismatch")
    _check_subgraph(graph, then_sg, f"{where}/then", report)
    _check_subgraph(graph, else_sg, f"{where}/else", report)


def _check_while(graph: Graph, node: Node, where: str, report: list):
    test_sg, body_sg = node.attrs.get("test_graph"), node.attrs.get("body_graph")
    if test_sg is None or body_sg is None:
        report.append(f"{where}: While is missing subgraphs")
        return
    n_state = node.attrs.get("n_state", 0)
    test_t = [r.type for r in test_sg.outputs]
    if len(test_t) != 1 or test_t[0].dtype != "bool" or test_t[0].shape not in ((), None):
        report.append(f"{where}: While test must produce one scalar bool")
    body_t = [r.type for r in body_sg.outputs]
    state_t = [r.type for r in node.inputs[:n_state]]
    if not _signatures_match(body_t, state_t):
        report.append(f"{where}: While body signature differs from loop state")
    want = n_state + node.attrs.get("n_test_caps", 0) + node.attrs.get(
        "n_body_caps", 0)
    if len(node.inputs) != want:
        report.append(f"{where}: While capture inputs mismatch")
    _check_subgraph(graph, test_sg, f"{where}/test", report)
    _check_subgraph(graph, body_sg, f"{where}/body", report)


def _check_call(graph: Graph, node: Node, where: str, report: list):
    name = node.attrs.get("fn_name")
    fn = graph.functions.get(name)
    if fn is None:
        report.append(f"{where}: FuncCall to unknown function {name!r}")
        return
    if len(node.inputs) != len(fn.body.params):
        report.append(f"{where}: FuncCall to {name} has {len(node.inputs)} "
                      f"arguments, definition takes {len(fn.body.params)}")
