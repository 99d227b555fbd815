"""Shared test utilities: corpus paths, random tensors, finite differences,
the hand-built dynamic_rnn graph, and brute-force dataflow oracles."""

from __future__ import annotations

import os
import random

from stagekit.graph import Graph, TensorValue, execute
from stagekit.graph.ir import TypeSpec
from stagekit.runtime import MslList, dispatch, tracing
from stagekit.runtime.intrinsics import INTRINSICS
from stagekit.runtime.trace import TraceContext

REPO = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
CORPUS = os.path.join(REPO, "corpus")


def corpus_source(name: str) -> str:
    with open(os.path.join(CORPUS, name)) as handle:
        return handle.read()


def rand_tensor(rng: random.Random, shape, low=-1.0, high=1.0) -> TensorValue:
    count = 1
    for dim in shape:
        count *= dim
    data = tuple(rng.uniform(low, high) for _ in range(count))
    return TensorValue("f64", tuple(shape), data)


def central_difference(fn, point: float, h: float = 1e-6) -> float:
    return (fn(point + h) - fn(point - h)) / (2 * h)


def rel_error(a: float, b: float) -> float:
    return abs(a - b) / max(1.0, abs(a), abs(b))


def handwritten_dynamic_rnn(batch: int, seq: int, features: int,
                            hidden: int) -> Graph:
    """Direct graph construction of the RNN: explicit while_stmt over an
    index, a tensor list written per step, stacked at the end."""
    m = {name: fn for name, fn in INTRINSICS.items()}
    ctx = TraceContext(backend="graph")
    with tracing(ctx):
        input_data = ctx.add_param("input_data", TypeSpec("f64", (batch, seq, features)))
        initial_state = ctx.add_param("initial_state", TypeSpec("f64", (batch, hidden)))
        sequence_len = ctx.add_param("sequence_len", TypeSpec("i64", (batch,)))
        w_x = ctx.add_param("w_x", TypeSpec("f64", (features, hidden)))
        w_h = ctx.add_param("w_h", TypeSpec("f64", (hidden, hidden)))
        b = ctx.add_param("b", TypeSpec("f64", (hidden,)))

        time_major = m["transpose"]([input_data, MslList([1, 0, 2])], None)
        max_len = m["reduce_max"]([sequence_len], None)
        outputs = dispatch.list_new(MslList([]), "f64")

        def loop_test(i, state, outs):
            return dispatch.binary("<", i, max_len)

        def loop_body(i, state, outs):
            prev_state = state
            x_i = dispatch.getitem(time_major, i)
            pre = dispatch.binary(
                "+", dispatch.binary("+", m["matmul"]([x_i, w_x], None),
                                     m["matmul"]([state, w_h], None)), b)
            new_state = m["tanh"]([pre], None)
            new_state = m["where"]([dispatch.binary("<", i, sequence_len),
                                    new_state, prev_state], None)
            outs = dispatch.list_append(outs, new_state)
            return MslList([dispatch.binary("+", i, 1), new_state, outs])

        final = dispatch.while_stmt(loop_test, loop_body,
                                    [0, initial_state, outputs],
                                    captures=[time_major, max_len, sequence_len],
                                    names=["i", "state", "outputs"])
        stacked = dispatch.list_stack(final.items[2])
        result = m["transpose"]([stacked, MslList([1, 0, 2])], None)
        ctx.graph.main.outputs = [ctx.materialize(ctx.stage(result))]
    return ctx.graph


# --- brute-force dataflow oracles (all-paths enumeration) -----------------------


def enumerate_paths(cfg, start, limit: int = 200000):
    """Every path from ``start`` to exit; the CFG must be acyclic."""
    paths = []

    def walk(node, trail):
        if len(paths) > limit:
            raise RuntimeError("path explosion")
        trail = trail + [node]
        if node is cfg.exit:
            paths.append(trail)
            return
        for succ in cfg.succ[node]:
            walk(succ, trail)

    walk(start, [])
    return paths


def _kills(writer, symbol) -> bool:
    return symbol == writer or symbol.starts_with(writer)


def oracle_live_in(cfg, act, node) -> set:
    """Symbols with some path from ``node`` reading them before any write."""
    symbols = set()
    for stmt in cfg.statements():
        symbols |= act.reads(stmt) | act.writes(stmt)
    live = set()
    for symbol in symbols:
        for path in enumerate_paths(cfg, node):
            found = False
            for step in path:
                if symbol in act.reads(step):
                    found = True
                    break
                if any(_kills(w, symbol) for w in act.writes(step)):
                    break
            if found:
                live.add(symbol)
                break
    return live


def oracle_reach_in(cfg, act, node) -> set:
    """(symbol, def node) pairs with a kill-free path from the def to node."""
    out = set()
    for path in enumerate_paths(cfg, cfg.entry):
        if node not in path:
            continue
        upto = path[:path.index(node)]
        for index, step in enumerate(upto):
            for written in act.writes(step):
                survives = True
                for later in upto[index + 1:]:
                    if any(_kills(w, written) for w in act.writes(later)):
                        survives = False
                        break
                if survives:
                    out.add((written, step))
    return out
