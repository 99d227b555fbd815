"""Acceptance suite: one test per criterion, each printing a PASS line with
its headline numbers.  Tolerances are pinned here and nowhere else:

* differential equivalence: exact for i64/bool, 1e-9 relative for f64
* gradients vs central finite differences (h=1e-6): relative error < 1e-5
"""

import json
import math
import os
import random
import time

import pytest

from stagekit.analysis import analyze_module
from stagekit.errors import (BranchMismatch, MslSyntaxError,
                             RecursionDepthExceeded, RuntimeGraphError)
from stagekit.graph import TensorValue, Tree, allclose, constant, execute
from stagekit.graph.grad import gradient
from stagekit.harness import FuzzSpec, diff_seed, gen_program, run_corpus
from stagekit.runtime import ParamSpec, dispatch, interpret_module, trace_module
from stagekit.syntax import parse_module
from stagekit.transforms import PassConfig, convert
from helpers import (CORPUS, corpus_source, handwritten_dynamic_rnn,
                     oracle_live_in, oracle_reach_in, rand_tensor, rel_error)

FD_H = 1e-6
FD_TOL = 1e-5
REL = 1e-9


def report(criterion: int, message: str):
    print(f"\nACCEPTANCE {criterion}: PASS  {message}", flush=True)


# --- 1. differential equivalence sweep -----------------------------------------


def test_criterion_1_differential_sweep():
    start = time.time()
    failures = []
    for seed in range(1000):
        for rep in diff_seed(seed, FuzzSpec(seed=seed), vectors=3):
            if not rep.ok:
                failures.append((seed, rep.verdict, rep.detail))
    elapsed = time.time() - start
    assert not failures, failures[:3]
    assert elapsed < 300, f"sweep took {elapsed:.0f}s, budget is 300s"
    report(1, f"1000 seeds x 3 vectors x 2 modes, zero mismatches "
              f"in {elapsed:.0f}s")


# --- 2. corpus goldens ------------------------------------------------------------


def test_criterion_2_corpus_goldens():
    summary = run_corpus(CORPUS)
    assert summary.total >= 8
    assert summary.ok, summary.failures
    report(2, f"{summary.passed}/{summary.total} corpus programs: converted "
              f"source, s-expr and dot byte-equal; staged == native <= 1e-9")


# --- 3. dynamic_rnn equivalence ----------------------------------------------------


def _rnn_feeds(seq: int):
    rng = random.Random(1234)
    return {
        "input_data": rand_tensor(rng, (2, seq, 4)),
        "initial_state": rand_tensor(rng, (2, 4)),
        "sequence_len": TensorValue("i64", (2,), (3, 1)),
        "w_x": rand_tensor(rng, (4, 4)),
        "w_h": rand_tensor(rng, (4, 4)),
        "b": rand_tensor(rng, (4,)),
    }


def _rnn_params(seq: int):
    return [ParamSpec("input_data", "f64", (2, seq, 4)),
            ParamSpec("initial_state", "f64", (2, 4)),
            ParamSpec("sequence_len", "i64", (2,)),
            ParamSpec("w_x", "f64", (4, 4)),
            ParamSpec("w_h", "f64", (4, 4)),
            ParamSpec("b", "f64", (4,))]


def test_criterion_3_dynamic_rnn():
    module = parse_module(corpus_source("dynamic_rnn.msl"), "dynamic_rnn.msl")
    feeds = _rnn_feeds(3)
    order = ["input_data", "initial_state", "sequence_len", "w_x", "w_h", "b"]

    native, _ = interpret_module(module, "dynamic_rnn",
                                 [feeds[k] for k in order])
    outcome = trace_module(module, "dynamic_rnn", _rnn_params(3))
    staged = execute(outcome.graph, feeds).outputs[0]
    hand_graph = handwritten_dynamic_rnn(2, 3, 4, 4)
    hand = execute(hand_graph, feeds).outputs[0]

    assert staged.shape == (2, 3, 4)  # [batch, max_len, hidden]
    assert allclose(native, staged, REL)
    assert allclose(hand, staged, REL)
    assert outcome.graph.count_ops("While") == 1

    longer = trace_module(module, "dynamic_rnn", _rnn_params(5))
    assert longer.graph.node_count() == outcome.graph.node_count()
    report(3, "converted+staged == handwritten graph == native (<=1e-9), "
              "shape [2,3,4], one While node, node count independent of "
              "sequence length")


# --- 4. in-graph training loop ------------------------------------------------------


def _sgd_reference(x, y, w, b, steps=200, lr=0.01, n=8.0):
    """Independent step-by-step reference with explicit Python loops."""
    rows, cols = 8, 2
    w = list(w)
    losses = []
    for _ in range(steps):
        pred = [sum(x[r * cols + c] * w[c] for c in range(cols)) + b
                for r in range(rows)]
        err = [pred[r] - y[r] for r in range(rows)]
        loss = 0.0
        for e in err:
            loss += e * e
        loss = loss / n
        grad_w = [sum(x[r * cols + c] * err[r] for r in range(rows)) * (2.0 / n)
                  for c in range(cols)]
        grad_b = sum(err) * (2.0 / n)
        w = [w[c] - lr * grad_w[c] for c in range(cols)]
        b = b - lr * grad_b
        losses.append(loss)
    return losses


def test_criterion_4_in_graph_training():
    module = parse_module(corpus_source("train_loop.msl"), "train_loop.msl")
    rng = random.Random(77)
    x = rand_tensor(rng, (8, 2))
    true_w, true_b = (1.5, -2.0), 0.7
    y_data = tuple(x.data[r * 2] * true_w[0] + x.data[r * 2 + 1] * true_w[1]
                   + true_b + rng.uniform(-0.05, 0.05) for r in range(8))
    y = TensorValue("f64", (8, 1), y_data)
    w0 = TensorValue("f64", (2, 1), (0.0, 0.0))
    b0 = constant(0.0)

    outcome = trace_module(module, "train",
                           [ParamSpec("x", "f64", (8, 2)),
                            ParamSpec("y", "f64", (8, 1)),
                            ParamSpec("w", "f64", (2, 1)),
                            ParamSpec("b", "f64", ())])
    assert outcome.graph.count_ops("While") == 1  # the whole loop is in-graph
    losses = execute(outcome.graph, {"x": x, "y": y, "w": w0, "b": b0}).outputs[0]
    assert losses.shape == (200,)

    reference = _sgd_reference(list(x.data), list(y.data), [0.0, 0.0], 0.0)
    assert rel_error(losses.data[-1], reference[-1]) <= REL
    for step in range(199):
        assert losses.data[step + 1] < losses.data[step], f"not monotone @{step}"
    report(4, f"200 SGD steps in one While node, single execute(); final loss "
              f"{losses.data[-1]:.6f} == reference (<=1e-9), strictly "
              f"decreasing")


# --- 5. gradient suite ----------------------------------------------------------------


def _tree_of_size(size: int, rng: random.Random) -> Tree:
    if size == 0:
        return Tree.empty()
    left = (size - 1) // 2
    return Tree(rng.uniform(0.5, 2.0), _tree_of_size(left, rng),
                _tree_of_size(size - 1 - left, rng))


def test_criterion_5_gradient_suite():
    module = parse_module(corpus_source("tree_prod.msl"), "tree_prod.msl")
    outcome = trace_module(module, "tree_prod",
                           [ParamSpec("base", "f64"), ParamSpec("tree", "tree")],
                           PassConfig(backend="sexpr"))
    grad_graph = gradient(outcome.graph, 0, ["base"])

    checks = 0
    rng = random.Random(5150)
    for size in (0, 1, 3, 7):
        tree = _tree_of_size(size, rng)

        def value(at):
            return execute(grad_graph,
                           {"base": constant(at), "tree": tree}).outputs[0].item()

        for _ in range(10):
            at = rng.uniform(0.6, 1.5)
            grad = execute(grad_graph,
                           {"base": constant(at), "tree": tree}).outputs[1].item()
            fd = (value(at + FD_H) - value(at - FD_H)) / (2 * FD_H)
            assert rel_error(grad, fd) < FD_TOL
            checks += 1

    empty = execute(grad_graph, {"base": constant(2.0), "tree": Tree.empty()})
    assert empty.outputs[1].item() == 1.0  # exactly

    loss_src = ("def loss_fn(x, y, w, b):\n"
                "    pred = m.matmul(x, w) + b\n"
                "    err = pred - y\n"
                "    return m.reduce_sum(err * err) / 8.0\n")
    loss_mod = parse_module(loss_src, "loss.msl")
    loss_out = trace_module(loss_mod, "loss_fn",
                            [ParamSpec("x", "f64", (8, 2)),
                             ParamSpec("y", "f64", (8, 1)),
                             ParamSpec("w", "f64", (2, 1)),
                             ParamSpec("b", "f64", ())])
    loss_grad = gradient(loss_out.graph, 0, ["w", "b"])
    x = rand_tensor(rng, (8, 2))
    y = rand_tensor(rng, (8, 1))

    def loss_at(w_data, b_value):
        return execute(loss_grad, {
            "x": x, "y": y, "w": TensorValue("f64", (2, 1), tuple(w_data)),
            "b": constant(b_value)}).outputs

    for _ in range(10):
        w_data = [rng.uniform(-2, 2), rng.uniform(-2, 2)]
        b_value = rng.uniform(-2, 2)
        outs = loss_at(w_data, b_value)
        for slot in range(2):
            def value(v, slot=slot):
                probe = list(w_data)
                probe[slot] = v
                return loss_at(probe, b_value)[0].item()
            fd = (value(w_data[slot] + FD_H) - value(w_data[slot] - FD_H)) / (2 * FD_H)
            assert rel_error(outs[1].data[slot], fd) < FD_TOL
        fd_b = (loss_at(w_data, b_value + FD_H)[0].item()
                - loss_at(w_data, b_value - FD_H)[0].item()) / (2 * FD_H)
        assert rel_error(outs[2].item(), fd_b) < FD_TOL
        checks += 3
    report(5, f"{checks} finite-difference checks < 1e-5 rel err "
              f"(tree_prod sizes 0/1/3/7 + regression loss); empty-tree "
              f"gradient exactly 1")


# --- 6. recursion backend contrast ------------------------------------------------------


def test_criterion_6_backend_contrast():
    module = parse_module(corpus_source("tree_prod.msl"), "tree_prod.msl")
    params = [ParamSpec("base", "f64"), ParamSpec("tree", "tree")]
    outcome = trace_module(module, "tree_prod", params,
                           PassConfig(backend="sexpr"))
    defs = [name for name in outcome.graph.functions]
    assert defs == ["tree_prod"]
    calls = sum(1 for n in outcome.graph.iter_nodes() if n.op == "FuncCall"
                and n.attrs["fn_name"] == "tree_prod")
    assert calls >= 2

    with pytest.raises(RecursionDepthExceeded):
        trace_module(module, "tree_prod", params, PassConfig(backend="graph"))
    report(6, f"sexpr backend: 1 definition, {calls} call sites; graph "
              f"backend: RecursionDepthExceeded")


# --- 7. dispatch semantics ----------------------------------------------------------------


def test_criterion_7_dispatch_semantics():
    from stagekit.graph.ir import TypeSpec
    from stagekit.runtime import tracing
    from stagekit.runtime.trace import TraceContext

    # concrete predicate: one branch runs, no nodes added
    ctx = TraceContext()
    calls = {"true": 0, "false": 0}
    with tracing(ctx):
        before = ctx.graph.node_count()

        def true_fn():
            calls["true"] += 1
            return 1.0

        def false_fn():
            calls["false"] += 1
            return 2.0

        value = dispatch.if_stmt(True, true_fn, false_fn, ["v"])
        assert value == 1.0
        assert calls == {"true": 1, "false": 0}
        assert ctx.graph.node_count() == before

    # staged predicate: exactly one Cond, each branch traced once
    ctx = TraceContext()
    calls = {"true": 0, "false": 0}
    with tracing(ctx):
        cond = ctx.add_param("c", TypeSpec("bool", ()))
        x = ctx.add_param("x", TypeSpec("f64", ()))

        def true_fn():
            calls["true"] += 1
            return dispatch.binary("*", x, x)

        def false_fn():
            calls["false"] += 1
            return x

        dispatch.if_stmt(cond, true_fn, false_fn, ["x"])
    assert calls == {"true": 1, "false": 1}
    assert ctx.graph.count_ops("Cond") == 1
    report(7, "concrete conditional: one branch, zero nodes; staged: one Cond "
              "node, each branch traced once")


# --- 8. dataflow oracles ---------------------------------------------------------------------


def test_criterion_8_dataflow_oracles():
    checked = 0
    seed = 0
    while checked < 50 and seed < 600:
        source = gen_program(FuzzSpec(
            seed=seed, feature_mask=frozenset({"if", "logical", "ternary"})))
        seed += 1
        module = parse_module(source, "t.msl")
        for fn, fa in analyze_module(module).items():
            if len(fa.cfg.nodes) > 10 or checked >= 50:
                continue
            for node in fa.cfg.statements():
                assert fa.flow.live_in[node] == oracle_live_in(
                    fa.cfg, fa.activity, node)
                fixpoint = {(d.name, d.node) for d in fa.flow.reach_in[node]
                            if not d.synthetic}
                assert fixpoint == oracle_reach_in(fa.cfg, fa.activity, node)
            checked += 1
    assert checked == 50

    # fixpoint stability on every corpus function
    from test_analysis import _transfer_stable
    for name in sorted(os.listdir(CORPUS)):
        if name.endswith(".msl"):
            module = parse_module(corpus_source(name), name)
            for fa in analyze_module(module).values():
                assert _transfer_stable(fa)
    report(8, "50 acyclic CFGs (<=10 nodes) equal brute-force path "
              "enumeration; fixpoint stable on all corpus functions")


# --- 9. error provenance ----------------------------------------------------------------------


def test_criterion_9_error_provenance():
    # conversion phase: unsupported syntax
    bad_syntax = "def f(x):\n    y = 'strings are not values'\n    return y\n"
    try:
        parse_module(bad_syntax, "conv.msl")
        assert False, "should have raised"
    except MslSyntaxError as exc:
        assert exc.span.file == "conv.msl" and exc.span.start_line == 2

    # staging phase: branch dtype mismatch
    mismatch = ("def main(c, x):\n"
                "    if c:\n"
                "        y = x\n"
                "    else:\n"
                "        y = 1\n"
                "    return y\n")
    module = parse_module(mismatch, "stage.msl")
    try:
        trace_module(module, "main",
                     [ParamSpec("c", "bool"), ParamSpec("x", "f64")])
        assert False, "should have raised"
    except BranchMismatch as exc:
        assert exc.span.file == "stage.msl" and exc.span.start_line == 2

    # runtime phase: failing staged assert
    asserting = ("def main(x):\n"
                 "    y = x + 1.0\n"
                 "    assert y > 0.0\n"
                 "    return y\n")
    module = parse_module(asserting, "run.msl")
    outcome = trace_module(module, "main", [ParamSpec("x", "f64")])
    try:
        execute(outcome.graph, {"x": constant(-5.0)})
        assert False, "should have raised"
    except RuntimeGraphError as exc:
        assert exc.span.file == "run.msl" and exc.span.start_line == 3
        assert exc.cause_kind == "AssertionFailed"
    report(9, "conversion/staging/runtime failures all report spans on the "
              "correct original lines")
