import random

import pytest

from stagekit.errors import NonDifferentiable, WhileNotDifferentiable
from stagekit.graph import Tree, constant, execute, validate
from stagekit.graph.grad import gradient
from stagekit.graph.tensor import TensorValue
from stagekit.runtime import ParamSpec, trace_module
from stagekit.syntax import parse_module
from stagekit.transforms import PassConfig
from helpers import corpus_source, rel_error

H = 1e-6
FD_TOL = 1e-5


def _trace(source, entry, params, backend="graph"):
    module = parse_module(source, "t.msl")
    return trace_module(module, entry, params, PassConfig(backend=backend))


def _tree_prod_grad_graph():
    outcome = _trace(corpus_source("tree_prod.msl"), "tree_prod",
                     [ParamSpec("base", "f64"), ParamSpec("tree", "tree")],
                     backend="sexpr")
    return gradient(outcome.graph, 0, ["base"])


def _fd(value_fn, at):
    return (value_fn(at + H) - value_fn(at - H)) / (2 * H)


def test_identity_gradient_is_one():
    outcome = _trace("def f(b):\n    return b\n", "f", [ParamSpec("b", "f64")])
    g = gradient(outcome.graph, 0, ["b"])
    result = execute(g, {"b": constant(3.25)})
    assert result.outputs[1].item() == 1.0


def test_gradient_graph_validates():
    g = _tree_prod_grad_graph()
    assert validate(g) == []


def test_tree_prod_single_node():
    g = _tree_prod_grad_graph()
    result = execute(g, {"base": constant(2.0), "tree": Tree.node(5.0)})
    assert result.outputs[0].item() == 20.0
    assert result.outputs[1].item() == 20.0  # 2 * base * 5


def test_tree_prod_empty_tree_gradient_exactly_one():
    g = _tree_prod_grad_graph()
    result = execute(g, {"base": constant(2.0), "tree": Tree.empty()})
    assert result.outputs[0].item() == 2.0
    assert result.outputs[1].item() == 1.0


def _tree_of_size(size: int, rng: random.Random) -> Tree:
    if size == 0:
        return Tree.empty()
    left = (size - 1) // 2
    right = size - 1 - left
    return Tree(rng.uniform(0.5, 2.0), _tree_of_size(left, rng),
                _tree_of_size(right, rng))


@pytest.mark.parametrize("size", [0, 1, 3, 7])
def test_tree_prod_matches_finite_differences(size):
    g = _tree_prod_grad_graph()
    rng = random.Random(size + 10)
    tree = _tree_of_size(size, rng)

    def value(base):
        return execute(g, {"base": constant(base), "tree": tree}).outputs[0].item()

    for _ in range(10):
        at = rng.uniform(0.6, 1.4)
        grad = execute(g, {"base": constant(at), "tree": tree}).outputs[1].item()
        assert rel_error(grad, _fd(value, at)) < FD_TOL


def test_linearity_sanity():
    outcome = _trace("def f(b, v):\n    return b * b * v\n", "f",
                     [ParamSpec("b", "f64"), ParamSpec("v", "f64")])
    g = gradient(outcome.graph, 0, ["b"])
    rng = random.Random(3)
    for _ in range(10):
        b, v = rng.uniform(-3, 3), rng.uniform(-3, 3)
        result = execute(g, {"b": constant(b), "v": constant(v)})
        assert rel_error(result.outputs[1].item(), 2 * b * v) < 1e-12


def test_regression_loss_gradients():
    source = ("def loss_fn(x, y, w, b):\n"
              "    pred = m.matmul(x, w) + b\n"
              "    err = pred - y\n"
              "    return m.reduce_sum(err * err) / 8.0\n")
    params = [ParamSpec("x", "f64", (8, 2)), ParamSpec("y", "f64", (8, 1)),
              ParamSpec("w", "f64", (2, 1)), ParamSpec("b", "f64", ())]
    outcome = _trace(source, "loss_fn", params)
    g = gradient(outcome.graph, 0, ["w", "b"])
    rng = random.Random(21)
    from helpers import rand_tensor
    x = rand_tensor(rng, (8, 2))
    y = rand_tensor(rng, (8, 1))

    def run(w_data, b_value):
        feeds = {"x": x, "y": y,
                 "w": TensorValue("f64", (2, 1), tuple(w_data)),
                 "b": constant(b_value)}
        return execute(g, feeds)

    for _ in range(10):
        w_data = [rng.uniform(-2, 2), rng.uniform(-2, 2)]
        b_value = rng.uniform(-2, 2)
        result = run(w_data, b_value)
        dw = result.outputs[1]
        db = result.outputs[2].item()
        for slot in range(2):
            def value(v, slot=slot):
                data = list(w_data)
                data[slot] = v
                return run(data, b_value).outputs[0].item()
            assert rel_error(dw.data[slot], _fd(value, w_data[slot])) < FD_TOL
        def value_b(v):
            return run(w_data, v).outputs[0].item()
        assert rel_error(db, _fd(value_b, b_value)) < FD_TOL


def test_cond_gradient_both_branches():
    source = ("def f(x, t):\n"
              "    if t > 0.0:\n"
              "        y = x * x\n"
              "    else:\n"
              "        y = x * 3.0\n"
              "    return y\n")
    outcome = _trace(source, "f", [ParamSpec("x", "f64"), ParamSpec("t", "f64")])
    g = gradient(outcome.graph, 0, ["x"])
    for t, expect in ((1.0, lambda x: 2 * x), (-1.0, lambda x: 3.0)):
        for x in (0.5, 2.0):
            result = execute(g, {"x": constant(x), "t": constant(t)})
            assert rel_error(result.outputs[1].item(), expect(x)) < 1e-12


def test_stack_index_gradient():
    source = ("def f(a):\n"
              "    xs = [a * 2.0, a * 3.0]\n"
              "    s = ag.stack(xs)\n"
              "    return s[0] * s[1]\n")
    outcome = _trace(source, "f", [ParamSpec("a", "f64")])
    g = gradient(outcome.graph, 0, ["a"])

    def value(a):
        return execute(g, {"a": constant(a)}).outputs[0].item()

    for a in (0.7, 1.3, -2.0):
        grad = execute(g, {"a": constant(a)}).outputs[1].item()
        assert rel_error(grad, _fd(value, a)) < FD_TOL  # d(6a^2)/da = 12a
        assert rel_error(grad, 12 * a) < 1e-9


def test_while_not_differentiable():
    outcome = _trace(corpus_source("while_halve.msl"), "main",
                     [ParamSpec("x", "f64")])
    with pytest.raises(WhileNotDifferentiable):
        gradient(outcome.graph, 0, ["x"])


def test_non_differentiable_op():
    source = "def f(x):\n    return m.reduce_max(x)\n"
    outcome = _trace(source, "f", [ParamSpec("x", "f64", (3,))])
    with pytest.raises(NonDifferentiable):
        gradient(outcome.graph, 0, ["x"])


def test_gradient_of_unused_parameter_is_zero():
    outcome = _trace("def f(a, b):\n    return a * a\n", "f",
                     [ParamSpec("a", "f64"), ParamSpec("b", "f64")])
    g = gradient(outcome.graph, 0, ["a", "b"])
    result = execute(g, {"a": constant(3.0), "b": constant(5.0)})
    assert result.outputs[1].item() == 6.0
    assert result.outputs[2].item() == 0.0


def test_multi_output_cond_gradient():
    source = ("def f(a, t):\n"
              "    if t > 0.0:\n"
              "        u = a * 2.0\n"
              "        v = a * 3.0\n"
              "    else:\n"
              "        u = a * 5.0\n"
              "        v = a * 7.0\n"
              "    return u * v\n")
    outcome = _trace(source, "f", [ParamSpec("a", "f64"), ParamSpec("t", "f64")])
    g = gradient(outcome.graph, 0, ["a"])
    for t, factor in ((1.0, 12.0), (-1.0, 70.0)):
        for a in (0.5, 2.0, -1.5):
            result = execute(g, {"a": constant(a), "t": constant(t)})
            assert abs(result.outputs[1].item() - factor * a) < 1e-9
