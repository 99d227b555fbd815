"""S-expression emission: the textual IR consumed by expression-oriented
back-ends, plus a small reader used by tests to round-trip the output.

Grammar (whitespace-separated, lowercase op names, no comments):

    program := { form }
    form    := "(def" NAME "(" params ")" body ")"
    params  := { "(" NAME DTYPE ")" }
    body    := { expr }          ; last expr(s) are the results
    expr    := NAME
             | "(const" DTYPE NUMBER ")"
             | "(cond" expr "(then" { expr } ")" "(else" { expr } ")" ")"
             | "(while" "(vars" { "(" NAME expr ")" } ")"
                        "(test" expr ")" "(body" { expr } ")" ")"
             | "(call" NAME { expr } ")"
             | "(" OPNAME { expr } ")"

Every graph is emitted as function definitions only; the main frame becomes
``(def main ...)``.  Values shared between consumers are emitted once per
use site (the tree is expression-shaped, like the IR it feeds).
"""

from __future__ import annotations

from ..errors import InternalError
from .ir import Graph, Node, NodeRef, Subgraph
from .tensor import format_scalar

_OP_NAMES = {
    "Add": "add", "Sub": "sub", "Mul": "mul", "Div": "div", "Mod": "mod",
    "Neg": "neg", "Lt": "lt", "Gt": "gt", "Le": "le", "Ge": "ge",
    "Eq": "eq", "Ne": "ne", "Not": "not", "MatMul": "matmul",
    "Transpose": "transpose", "ReduceMax": "reduce_max",
    "ReduceSum": "reduce_sum", "Where": "where", "Tanh": "tanh",
    "Sigmoid": "sigmoid", "Shape": "shape", "Range": "range", "Index": "index",
    "ListNew": "list_new", "ListAppend": "list_append", "ListPop": "list_pop",
    "ListGet": "list_get", "ListSet": "list_set", "ListStack": "list_stack",
    "Print": "print", "Assert": "assert",
    "TreeIsEmpty": "tree_is_empty", "TreeLeft": "tree_left",
    "TreeRight": "tree_right", "TreeValue": "tree_value",
}


def to_sexpr(graph: Graph) -> str:
    forms = []
    for name, fn in graph.functions.items():
        forms.append(_render_def(name, fn.body))
    forms.append(_render_def("main", graph.main))
    return "\n".join(forms) + "\n"


def _sanitize(name: str) -> str:
    return name.strip("<>") or "v"


def _render_def(name: str, sg: Subgraph) -> str:
    env = {}
    params = []
    for param in sg.params:
        pname = _sanitize(param.attrs.get("name", "p"))
        env[id(param)] = pname
        params.append(f"({pname} {param.out_types[0].render()})")
    body = _frame_exprs(sg, env)
    return f"(def {name} ({' '.join(params)}) {' '.join(body)})"


def _frame_exprs(sg: Subgraph, env: dict) -> list:
    """Effect expressions in node order, then the frame outputs."""
    exprs = [_render_node(node, env)
             for node in sg.nodes if node.op in ("Print", "Assert")]
    exprs += [_render_ref(ref, env) for ref in sg.outputs]
    return exprs


def _render_ref(ref: NodeRef, env: dict) -> str:
    node = ref.node
    if node.op == "Param":
        try:
            return env[id(node)]
        except KeyError:
            raise InternalError("parameter rendered outside its frame")
    text = _render_node(node, env)
    if len(node.out_types) > 1:
        return f"(out (const i64 {ref.out}) {text})"
    return text


def _subframe_env(sg: Subgraph, state_names: list, outer_env: dict,
                  capture_refs: list) -> dict:
    """State params map to their names; capture params inline the outer
    expression they were captured from."""
    env = {}
    captures = iter(capture_refs)
    for index, param in enumerate(sg.params):
        if index < len(state_names):
            env[id(param)] = _sanitize(state_names[index])
        else:
            env[id(param)] = _render_ref(next(captures), outer_env)
    return env


def _render_node(node: Node, env: dict) -> str:
    op = node.op
    if op == "Const":
        value = node.attrs["value"]
        if value.shape == ():
            return f"(const {value.dtype} {_number(value.item())})"
        payload = " ".join(_number(v) for v in value.data)
        dims = " ".join(str(d) for d in value.shape)
        return f"(const {value.dtype} (dims {dims}) {payload})"
    if op == "Cond":
        n_then = node.attrs["n_then_caps"]
        pred = _render_ref(node.inputs[0], env)
        then_sg = node.attrs["then_graph"]
        else_sg = node.attrs["else_graph"]
        then_env = _subframe_env(then_sg, [], env, node.inputs[1:1 + n_then])
        else_env = _subframe_env(else_sg, [], env, node.inputs[1 + n_then:])
        then_body = " ".join(_frame_exprs(then_sg, then_env))
        else_body = " ".join(_frame_exprs(else_sg, else_env))
        return f"(cond {pred} (then {then_body}) (else {else_body}))"
    if op == "While":
        n_state = node.attrs["n_state"]
        n_test = node.attrs["n_test_caps"]
        names = [_sanitize(n) for n in node.attrs["names"]]
        inits = [_render_ref(r, env) for r in node.inputs[:n_state]]
        vars_text = " ".join(f"({n} {i})" for n, i in zip(names, inits))
        test_sg = node.attrs["test_graph"]
        body_sg = node.attrs["body_graph"]
        test_env = _subframe_env(test_sg, names, env,
                                 node.inputs[n_state:n_state + n_test])
        body_env = _subframe_env(body_sg, names, env,
                                 node.inputs[n_state + n_test:])
        test_text = _render_ref(test_sg.outputs[0], test_env)
        body_text = " ".join(_frame_exprs(body_sg, body_env))
        return f"(while (vars {vars_text}) (test {test_text}) (body {body_text}))"
    if op == "FuncCall":
        args = " ".join(_render_ref(r, env) for r in node.inputs)
        sep = " " if args else ""
        return f"(call {node.attrs['fn_name']}{sep}{args})"
    name = _OP_NAMES.get(op)
    if name is None:
        raise InternalError(f"no s-expression form for op {op}")
    parts = [_render_ref(r, env) for r in node.inputs]
    if op == "Transpose":
        parts += [f"(const i64 {p})" for p in node.attrs["perm"]]
    if op == "Assert" and node.attrs.get("message"):
        pass  # messages are diagnostic only; not part of the wire format
    joined = " ".join(parts)
    sep = " " if joined else ""
    return f"({name}{sep}{joined})"


def _number(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    return format_scalar(v) if not isinstance(v, float) else repr(v)


# --- reader (for tests) ----------------------------------------------------------

def parse_sexpr(text: str):
    """Parse a program into nested lists of atoms."""
    tokens = text.replace("(", " ( ").replace(")", " ) ").split()
    forms = []
    pos = 0
    while pos < len(tokens):
        form, pos = _read(tokens, pos)
        forms.append(form)
    return forms


def _read(tokens: list, pos: int):
    if tokens[pos] == "(":
        out = []
        pos += 1
        while tokens[pos] != ")":
            item, pos = _read(tokens, pos)
            out.append(item)
        return out, pos + 1
    if tokens[pos] == ")":
        raise InternalError("unbalanced s-expression")
    return tokens[pos], pos + 1
