import random

import pytest

from stagekit.errors import (DivisionByZero, DtypeMismatch,
                             IterationLimitExceeded, RuntimeGraphError,
                             ShapeMismatch, ValidationError)
from stagekit.graph import (Graph, Node, NodeRef, Subgraph, TensorValue,
                            Tree, TypeSpec, constant, execute, validate, zeros)
from stagekit.graph import tensor
from stagekit.graph.dot import to_dot
from stagekit.graph.sexpr import parse_sexpr, to_sexpr
from stagekit.runtime import ParamSpec, trace_module
from stagekit.syntax import parse_module
from stagekit.transforms import PassConfig
from helpers import CORPUS, corpus_source, rand_tensor


def _const_graph():
    g = Graph()
    a = Node("Const", [], {"value": tensor.scalar(2)}, out_types=[TypeSpec("i64", ())])
    b = Node("Const", [], {"value": tensor.scalar(3)}, out_types=[TypeSpec("i64", ())])
    add = Node("Add", [a.ref(0), b.ref(0)], {}, out_types=[TypeSpec("i64", ())])
    for node in (a, b, add):
        g.main.add(node)
    g.main.outputs = [add.ref(0)]
    return g


# --- validate ---------------------------------------------------------------------


def test_validate_empty_graph():
    assert validate(Graph()) == []


def test_validate_cond_branch_arity_mismatch():
    g = Graph()
    pred = Node("Const", [], {"value": tensor.scalar(True)},
                out_types=[TypeSpec("bool", ())])
    g.main.add(pred)
    then_sg, else_sg = Subgraph(), Subgraph()
    t1 = Node("Const", [], {"value": tensor.scalar(1)},
              out_types=[TypeSpec("i64", ())])
    then_sg.add(t1)
    then_sg.outputs = [t1.ref(0)]
    e1 = Node("Const", [], {"value": tensor.scalar(1)},
              out_types=[TypeSpec("i64", ())])
    else_sg.add(e1)
    else_sg.outputs = [e1.ref(0), e1.ref(0)]
    cond = Node("Cond", [pred.ref(0)],
                {"then_graph": then_sg, "else_graph": else_sg,
                 "n_then_caps": 0, "n_else_caps": 0},
                out_types=[TypeSpec("i64", ())])
    g.main.add(cond)
    g.main.outputs = [cond.ref(0)]
    with pytest.raises(ValidationError):
        validate(g)


def test_validate_corpus_sweep():
    import json, os
    manifest = json.load(open(os.path.join(CORPUS, "manifest.json")))
    for prog in manifest["programs"]:
        module = parse_module(corpus_source(prog["file"]), prog["file"])
        params = [ParamSpec(p["name"], p["dtype"], tuple(p.get("shape", ())))
                  for p in prog["params"]]
        outcome = trace_module(module, prog["entry"], params,
                               PassConfig(backend=prog.get("backend", "graph")))
        assert validate(outcome.graph) == []


# --- execute ----------------------------------------------------------------------


def test_execute_const_add():
    result = execute(_const_graph())
    assert result.outputs[0].item() == 5


def test_execute_staged_while_matches_native():
    source = corpus_source("while_halve.msl")
    module = parse_module(source, "t.msl")
    outcome = trace_module(module, "main", [ParamSpec("x", "f64")])
    result = execute(outcome.graph, {"x": constant(16.0)})
    assert result.outputs[0].item() == 1.0


def test_execute_iteration_limit():
    source = ("def main(x):\n"
              "    while x > 1.0:\n"
              "        ag.set_loop_options(max_iterations=2)\n"
              "        x = x / 2.0\n"
              "    return x\n")
    module = parse_module(source, "t.msl")
    outcome = trace_module(module, "main", [ParamSpec("x", "f64")])
    ok = execute(outcome.graph, {"x": constant(4.0)})
    assert ok.outputs[0].item() == 1.0
    with pytest.raises(IterationLimitExceeded):
        execute(outcome.graph, {"x": constant(64.0)})


def test_execute_missing_feed():
    g = Graph()
    g.main.add_param("x", TypeSpec("f64", ()))
    with pytest.raises(RuntimeGraphError):
        execute(g, {})


def test_while_node_count_independent_of_iterations():
    source = corpus_source("while_halve.msl")
    module = parse_module(source, "t.msl")
    outcome = trace_module(module, "main", [ParamSpec("x", "f64")])
    count = outcome.graph.node_count()
    for feed in (2.0, 65536.0):
        execute(outcome.graph, {"x": constant(feed)})
        assert outcome.graph.node_count() == count


def test_cond_laziness_effect_log():
    source = ("def main(c, x):\n"
              "    if c > 0.0:\n"
              "        print(x)\n"
              "    else:\n"
              "        print(x + 100.0)\n"
              "    return x\n")
    module = parse_module(source, "t.msl")
    outcome = trace_module(module, "main",
                           [ParamSpec("c", "f64"), ParamSpec("x", "f64")])
    result = execute(outcome.graph, {"c": constant(1.0), "x": constant(7.0)})
    assert result.print_log == ["7.0"]
    result = execute(outcome.graph, {"c": constant(-1.0), "x": constant(7.0)})
    assert result.print_log == ["107.0"]


# --- kernels -----------------------------------------------------------------------


def test_matmul_shape():
    a = zeros((2, 3))
    b = zeros((3, 4))
    assert tensor.matmul(a, b).shape == (2, 4)


def test_matmul_inner_mismatch():
    with pytest.raises(ShapeMismatch):
        tensor.matmul(zeros((2, 3)), zeros((4, 2)))


def test_transpose_involution():
    rng = random.Random(5)
    x = rand_tensor(rng, (2, 3, 4))
    assert tensor.transpose(tensor.transpose(x, (1, 0, 2)), (1, 0, 2)) == x


def test_reduce_sum_naive_oracle():
    rng = random.Random(9)
    x = rand_tensor(rng, (3, 4))
    acc = 0.0
    for v in x.data:
        acc += v
    assert tensor.reduce_sum(x).item() == acc


def test_broadcasting_scalar():
    x = constant([[1.0, 2.0], [3.0, 4.0]])
    y = tensor.binop("*", x, tensor.scalar(2.0))
    assert y.data == (2.0, 4.0, 6.0, 8.0)


def test_broadcasting_trailing():
    x = constant([[1, 2, 3], [4, 5, 6]])
    row = constant([10, 20, 30])
    y = tensor.binop("+", x, row)
    assert y.data == (11, 22, 33, 14, 25, 36)


def test_broadcast_mismatch():
    with pytest.raises(ShapeMismatch):
        tensor.binop("+", zeros((2, 3)), zeros((4,)))


def test_where_row_select():
    cond = TensorValue("bool", (2,), (True, False))
    a = constant([[1.0, 2.0], [3.0, 4.0]])
    b = constant([[9.0, 9.0], [9.0, 9.0]])
    out = tensor.where(cond, a, b)
    assert out.data == (1.0, 2.0, 9.0, 9.0)


def test_dtype_promotion():
    out = tensor.binop("+", tensor.scalar(1), tensor.scalar(2.5))
    assert out.dtype == "f64" and out.item() == 3.5


def test_bool_arithmetic_rejected():
    with pytest.raises((DtypeMismatch, Exception)):
        tensor.binop("+", tensor.scalar(True), tensor.scalar(False))


def test_kernel_division_by_zero():
    with pytest.raises(DivisionByZero):
        tensor.binop("/", tensor.scalar(1.0), tensor.scalar(0.0))


def test_index_leading_axis():
    x = constant([[1, 2], [3, 4], [5, 6]])
    assert tensor.index(x, 1).data == (3, 4)
    with pytest.raises(Exception):
        tensor.index(x, 9)


# --- s-expressions -----------------------------------------------------------------


def test_sexpr_const_add():
    text = to_sexpr(_const_graph())
    assert "(add (const i64 2) (const i64 3))" in text


def test_sexpr_cond_shape():
    source = corpus_source("listing1_cond.msl")
    module = parse_module(source, "t.msl")
    outcome = trace_module(module, "f", [ParamSpec("x", "f64")])
    text = to_sexpr(outcome.graph)
    assert "(cond " in text and "(then " in text and "(else " in text


def test_sexpr_tree_prod_one_def_two_calls():
    source = corpus_source("tree_prod.msl")
    module = parse_module(source, "t.msl")
    outcome = trace_module(module, "tree_prod",
                           [ParamSpec("base", "f64"), ParamSpec("tree", "tree")],
                           PassConfig(backend="sexpr"))
    text = to_sexpr(outcome.graph)
    assert text.count("(def tree_prod ") == 1
    body = text.split("\n")[0]
    assert body.count("(call tree_prod ") == 2


def test_sexpr_round_trips_through_reader():
    source = corpus_source("while_halve.msl")
    module = parse_module(source, "t.msl")
    outcome = trace_module(module, "main", [ParamSpec("x", "f64")])
    text = to_sexpr(outcome.graph)
    forms = parse_sexpr(text)
    assert forms and all(form[0] == "def" for form in forms)
    again = parse_sexpr(to_sexpr(outcome.graph))
    assert forms == again  # deterministic emission


def test_sexpr_deterministic():
    source = corpus_source("dynamic_rnn.msl")
    module = parse_module(source, "t.msl")
    params = [ParamSpec("input_data", "f64", (2, 3, 4)),
              ParamSpec("initial_state", "f64", (2, 4)),
              ParamSpec("sequence_len", "i64", (2,)),
              ParamSpec("w_x", "f64", (4, 4)),
              ParamSpec("w_h", "f64", (4, 4)),
              ParamSpec("b", "f64", (4,))]
    first = to_sexpr(trace_module(module, "dynamic_rnn", params).graph)
    second = to_sexpr(trace_module(module, "dynamic_rnn", params).graph)
    assert first == second


# --- dot ---------------------------------------------------------------------------


def test_dot_empty_graph():
    text = to_dot(Graph())
    assert text.startswith("digraph") and text.rstrip().endswith("}")


def test_dot_cond_two_clusters():
    source = corpus_source("listing1_cond.msl")
    module = parse_module(source, "t.msl")
    outcome = trace_module(module, "f", [ParamSpec("x", "f64")])
    text = to_dot(outcome.graph)
    assert text.count("subgraph cluster_") >= 3  # main + then + else


def test_dot_unique_node_ids():
    source = corpus_source("dynamic_rnn.msl")
    module = parse_module(source, "t.msl")
    params = [ParamSpec("input_data", "f64", (2, 3, 4)),
              ParamSpec("initial_state", "f64", (2, 4)),
              ParamSpec("sequence_len", "i64", (2,)),
              ParamSpec("w_x", "f64", (4, 4)),
              ParamSpec("w_h", "f64", (4, 4)),
              ParamSpec("b", "f64", (4,))]
    text = to_dot(trace_module(module, "dynamic_rnn", params).graph)
    ids = [line.split()[0] for line in text.splitlines()
           if line.strip().startswith("n") and "[label=" in line]
    assert len(ids) == len(set(ids))
