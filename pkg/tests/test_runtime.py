import pytest
from hypothesis import given, settings, strategies as st

from stagekit.errors import (AssertionFailed, BranchMismatch, ContextError,
                             DivisionByZero, ElementTypeUnset, EmptyPop,
                             IndexOutOfRange, LoopVariantType, MslTypeError,
                             NonBooleanTest, NotIterable, RuntimeGraphError,
                             UndefinedSymbol)
from stagekit.graph import TensorValue, constant, execute
from stagekit.graph.ir import TypeSpec
from stagekit.runtime import (MslList, ParamSpec, dispatch, interpret_module,
                              is_staged, trace_module, tracing)
from stagekit.runtime.trace import TraceContext
from stagekit.runtime.values import Staged, UndefinedValue
from stagekit.syntax import parse_module
from stagekit.transforms import PassConfig


def fresh_ctx():
    return TraceContext()


def staged_scalar(ctx, value=1.0):
    return ctx.stage(value)


# --- is_staged -----------------------------------------------------------------


def test_is_staged():
    assert not is_staged(3)
    assert not is_staged(UndefinedValue("x"))
    ctx = fresh_ctx()
    with tracing(ctx):
        assert is_staged(ctx.stage(3))


# --- if_stmt --------------------------------------------------------------------


def test_if_concrete_runs_one_thunk():
    calls = {"true": 0, "false": 0}

    def true_fn():
        calls["true"] += 1
        return 7

    def false_fn():
        calls["false"] += 1
        return 3

    assert dispatch.if_stmt(True, true_fn, false_fn, ["v"]) == 7
    assert calls == {"true": 1, "false": 0}


def test_if_staged_traces_both_once():
    ctx = fresh_ctx()
    calls = {"true": 0, "false": 0}
    with tracing(ctx):
        x = ctx.add_param("x", TypeSpec("f64", ()))
        cond = dispatch.binary(">", x, 0.0)

        def true_fn():
            calls["true"] += 1
            return dispatch.binary("*", x, x)

        def false_fn():
            calls["false"] += 1
            return x

        out = dispatch.if_stmt(cond, true_fn, false_fn, ["x"])
        assert is_staged(out)
    assert calls == {"true": 1, "false": 1}
    conds = [n for n in ctx.graph.iter_nodes() if n.op == "Cond"]
    assert len(conds) == 1
    then_sg = conds[0].attrs["then_graph"]
    assert len(then_sg.outputs) == 1


def test_if_staged_branch_dtype_mismatch():
    ctx = fresh_ctx()
    with tracing(ctx):
        x = ctx.add_param("x", TypeSpec("f64", ()))
        cond = dispatch.binary(">", x, 0.0)
        with pytest.raises(BranchMismatch):
            dispatch.if_stmt(cond, lambda: 1.5, lambda: 2, ["v"])


def test_if_staged_undefined_branch_output():
    from stagekit.errors import UndefinedBranchOutput
    ctx = fresh_ctx()
    with tracing(ctx):
        x = ctx.add_param("x", TypeSpec("bool", ()))
        with pytest.raises(UndefinedBranchOutput):
            dispatch.if_stmt(x, lambda: UndefinedValue("y"), lambda: 1.0, ["y"])


# --- while_stmt -----------------------------------------------------------------


def test_while_native_halving():
    steps = []

    def test_fn(x):
        return x > 1.0

    def body_fn(x):
        steps.append(x)
        return x / 2.0

    result = dispatch.while_stmt(test_fn, body_fn, [16.0])
    assert result == 1.0
    assert len(steps) == 4


def test_while_staged_single_node():
    ctx = fresh_ctx()
    calls = {"test": 0, "body": 0}
    with tracing(ctx):
        x = ctx.add_param("x", TypeSpec("f64", ()))

        def test_fn(v):
            calls["test"] += 1
            return dispatch.binary(">", v, 1.0)

        def body_fn(v):
            calls["body"] += 1
            return dispatch.binary("/", v, 2.0)

        out = dispatch.while_stmt(test_fn, body_fn, [x], names=["x"])
        assert is_staged(out)
    assert calls == {"test": 1, "body": 1}  # one-trace rule
    whiles = [n for n in ctx.graph.iter_nodes() if n.op == "While"]
    assert len(whiles) == 1
    body_ops = [n.op for n in whiles[0].attrs["body_graph"].nodes]
    assert body_ops.count("Div") == 1


def test_while_zero_iterations():
    result = dispatch.while_stmt(lambda x: x > 100.0, lambda x: x / 2.0, [16.0])
    assert result == 16.0


def test_while_staged_loop_variant_type():
    ctx = fresh_ctx()
    with tracing(ctx):
        x = ctx.add_param("x", TypeSpec("i64", ()))
        with pytest.raises(LoopVariantType):
            dispatch.while_stmt(lambda v: dispatch.binary("<", v, 10),
                                lambda v: 1.5, [x], names=["x"])


def test_while_staged_non_boolean_test():
    ctx = fresh_ctx()
    with tracing(ctx):
        x = ctx.add_param("x", TypeSpec("f64", ()))
        with pytest.raises(NonBooleanTest):
            dispatch.while_stmt(lambda v: dispatch.binary("+", v, 1.0),
                                lambda v: v, [x], names=["x"])


def test_while_undefined_state_named():
    ctx = fresh_ctx()
    with tracing(ctx):
        x = ctx.add_param("x", TypeSpec("f64", ()))
        with pytest.raises(UndefinedSymbol) as info:
            dispatch.while_stmt(lambda a, b: dispatch.binary(">", a, 0.0),
                                lambda a, b: MslList([a, b]),
                                [x, UndefinedValue("acc")], names=["x", "acc"])
        assert info.value.symbol == "acc"


# --- for_stmt --------------------------------------------------------------------


def test_for_concrete_range():
    from stagekit.runtime.values import RangeVal
    result = dispatch.for_stmt(RangeVal(3),
                               lambda i, acc: acc + i, [0])
    assert result == 3


def test_for_staged_range_becomes_while():
    ctx = fresh_ctx()
    with tracing(ctx):
        n = ctx.add_param("n", TypeSpec("i64", ()))
        from stagekit.runtime.intrinsics import INTRINSICS
        rng = INTRINSICS["range"]([n], None)
        out = dispatch.for_stmt(rng, lambda i, acc: dispatch.binary("+", acc, i),
                                [ctx.stage(0)], names=["acc"])
        assert is_staged(out)
    whiles = [n_ for n_ in ctx.graph.iter_nodes() if n_.op == "While"]
    assert len(whiles) == 1


def test_for_concrete_list_of_staged_unrolls():
    ctx = fresh_ctx()
    with tracing(ctx):
        xs = [ctx.add_param(f"x{i}", TypeSpec("f64", ())) for i in range(3)]
        acc = dispatch.for_stmt(MslList(list(xs)),
                                lambda v, acc: dispatch.binary("+", acc, v),
                                [ctx.stage(0.0)], names=["acc"])
        assert is_staged(acc)
    adds = [n for n in ctx.graph.iter_nodes() if n.op == "Add"]
    assert len(adds) == 3  # one copy of the body per element


def test_for_scalar_not_iterable():
    with pytest.raises(NotIterable):
        dispatch.for_stmt(3.5, lambda i, acc: acc, [0])


# --- logical ops -------------------------------------------------------------------


def test_and_short_circuit_counter():
    calls = []

    def rhs():
        calls.append(1)
        return True

    assert dispatch.and_(False, rhs) is False
    assert calls == []
    assert dispatch.and_(True, rhs) is True
    assert calls == [1]


def test_staged_and_is_cond_on_lhs():
    ctx = fresh_ctx()
    with tracing(ctx):
        b = ctx.add_param("b", TypeSpec("bool", ()))
        c = ctx.add_param("c", TypeSpec("bool", ()))
        out = dispatch.and_(b, lambda: c)
        assert is_staged(out)
    conds = [n for n in ctx.graph.iter_nodes() if n.op == "Cond"]
    assert len(conds) == 1
    # else branch passes the lhs through: cond(b, c, b)
    else_sg = conds[0].attrs["else_graph"]
    assert else_sg.outputs[0].node.op == "Param"


def test_not_not_roundtrip():
    for value in (True, False):
        assert dispatch.not_(dispatch.not_(value)) is value


def test_or_non_bool_rejected():
    with pytest.raises(MslTypeError):
        dispatch.or_(1, lambda: True)


# --- arithmetic ------------------------------------------------------------------


def test_gt_concrete():
    assert dispatch.binary(">", 3, 0) is True


def test_add_autoboxes_one_const():
    ctx = fresh_ctx()
    with tracing(ctx):
        x = ctx.add_param("x", TypeSpec("f64", ()))
        out = dispatch.binary("+", x, 2.0)
        assert is_staged(out)
    consts = [n for n in ctx.graph.iter_nodes() if n.op == "Const"]
    assert len(consts) == 1


def test_mod_sign_of_divisor():
    assert dispatch.binary("%", -7, 3) == 2
    assert dispatch.binary("%", 7, -3) == -2


def test_division_always_float():
    result = dispatch.binary("/", 7, 2)
    assert isinstance(result, float) and result == 3.5


def test_division_by_zero():
    with pytest.raises(DivisionByZero):
        dispatch.binary("/", 1, 0)


def test_eq_bool_number_rejected():
    with pytest.raises(MslTypeError):
        dispatch.binary("==", True, 1)


def test_mixed_dtype_promotes_staged():
    ctx = fresh_ctx()
    with tracing(ctx):
        i = ctx.add_param("i", TypeSpec("i64", ()))
        out = dispatch.binary("+", i, 1.5)
        assert out.type.dtype == "f64"


# --- lists -------------------------------------------------------------------------


def test_append_pop_inverse():
    lst = MslList([1.0, 2.0])
    grown = dispatch.list_append(lst, 3.0)
    pair = dispatch.list_pop(grown)
    assert pair.items[0].items == [1.0, 2.0]
    assert pair.items[1] == 3.0
    assert lst.items == [1.0, 2.0]  # value semantics: original untouched


def test_pop_empty():
    with pytest.raises(EmptyPop):
        dispatch.list_pop(MslList([]))


def test_staged_append_without_element_type():
    source = ("def main(n):\n"
              "    xs = []\n"
              "    i = 0\n"
              "    while i < n:\n"
              "        xs.append(1.0)\n"
              "        i = i + 1\n"
              "    return ag.stack(xs)\n")
    module = parse_module(source, "t.msl")
    with pytest.raises(ElementTypeUnset):
        trace_module(module, "main", [ParamSpec("n", "i64")])


def test_getitem_setitem_value_semantics():
    lst = MslList([1, 2, 3])
    updated = dispatch.setitem(lst, 1, 9)
    assert updated.items == [1, 9, 3]
    assert lst.items == [1, 2, 3]


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(-50, 50), min_size=1, max_size=8),
       st.integers(0, 7), st.integers(-50, 50))
def test_setitem_getitem_property(values, index, value):
    index = index % len(values)
    lst = MslList(list(values))
    assert dispatch.getitem(dispatch.setitem(lst, index, value), index) == value


def test_getitem_out_of_range():
    with pytest.raises(IndexOutOfRange):
        dispatch.getitem(MslList([1]), 5)


def test_stack_concrete():
    stacked = dispatch.list_stack(MslList([1.0, 2.0, 3.0]))
    assert stacked.dtype == "f64" and stacked.shape == (3,)


# --- converted_call / specialization ------------------------------------------------


def test_converted_call_len():
    from stagekit.runtime.calls import converted_call
    source = "def main(xs):\n    return len(xs)\n"
    module = parse_module(source, "t.msl")
    result, _ = interpret_module(module, "main", [MslList([1, 2, 3])])
    assert result == 3


def test_print_staged_defers():
    source = "def main(x):\n    print(x)\n    return x\n"
    module = parse_module(source, "t.msl")
    outcome = trace_module(module, "main", [ParamSpec("x", "f64")])
    prints = [n for n in outcome.graph.iter_nodes() if n.op == "Print"]
    assert len(prints) == 1
    assert outcome.interp.print_log == []  # nothing at trace time
    result = execute(outcome.graph, {"x": constant(2.5)})
    assert result.print_log == ["2.5"]


def test_specialization_cache_one_definition():
    source = ("def double(a):\n"
              "    return a + a\n"
              "def main(x, y):\n"
              "    u = double(x)\n"
              "    v = double(y)\n"
              "    return u + v\n")
    module = parse_module(source, "t.msl")
    outcome = trace_module(module, "main",
                           [ParamSpec("x", "f64"), ParamSpec("y", "f64")],
                           PassConfig(backend="sexpr"))
    defs = [n for n in outcome.graph.functions if n.startswith("double")]
    assert len(defs) == 1


def test_specialization_two_dtypes():
    source = ("def double(a):\n"
              "    return a + a\n"
              "def main(x, y):\n"
              "    u = double(x)\n"
              "    v = double(y)\n"
              "    return v\n")
    module = parse_module(source, "t.msl")
    outcome = trace_module(module, "main",
                           [ParamSpec("x", "f64"), ParamSpec("y", "i64")],
                           PassConfig(backend="sexpr"))
    defs = [n for n in outcome.graph.functions if n.startswith("double")]
    assert len(defs) == 2


# --- assert ---------------------------------------------------------------------------


def test_assert_true_noop():
    assert dispatch.assert_stmt(True, None) is None


def test_assert_false_raises():
    with pytest.raises(AssertionFailed):
        dispatch.assert_stmt(False, None)


def test_staged_assert_fires_at_execution_with_span():
    source = ("def main(x):\n"
              "    assert x > 0.0, 'must be positive'\n"
              "    return x\n")
    module = parse_module(source, "check.msl")
    outcome = trace_module(module, "main", [ParamSpec("x", "f64")])
    good = execute(outcome.graph, {"x": constant(1.0)})
    assert good.outputs[0].item() == 1.0
    with pytest.raises(RuntimeGraphError) as info:
        execute(outcome.graph, {"x": constant(-1.0)})
    assert info.value.span.file == "check.msl"
    assert info.value.span.start_line == 2
    assert info.value.cause_kind == "AssertionFailed"


# --- sentinels and contexts -------------------------------------------------------------


def test_undefined_into_staged_op():
    ctx = fresh_ctx()
    with tracing(ctx):
        x = ctx.add_param("x", TypeSpec("f64", ()))
        with pytest.raises(UndefinedSymbol) as info:
            dispatch.binary("+", x, UndefinedValue("w"))
    assert info.value.symbol == "w"


def test_staged_value_cannot_escape_context():
    ctx = fresh_ctx()
    with tracing(ctx):
        x = ctx.add_param("x", TypeSpec("f64", ()))
    other = fresh_ctx()
    with tracing(other):
        with pytest.raises(ContextError):
            other.stage(x)


def test_undefined_read_reported_with_name():
    source = ("def main(c):\n"
              "    if c > 0:\n"
              "        y = 1\n"
              "    return y + 1\n")
    module = parse_module(source, "t.msl")
    with pytest.raises(UndefinedSymbol) as info:
        interpret_module(module, "main", [0])
    assert info.value.symbol == "y"


def test_trace_contexts_are_thread_local():
    import threading
    module_text = ("def main(x):\n"
                   "    while x > 1.0:\n"
                   "        x = x / 2.0\n"
                   "    return x\n")
    results = {}
    errors = []

    def worker(tag, feed):
        try:
            module = parse_module(module_text, f"{tag}.msl")
            outcome = trace_module(module, "main", [ParamSpec("x", "f64")])
            out = execute(outcome.graph, {"x": constant(feed)})
            results[tag] = out.outputs[0].item()
        except Exception as exc:  # noqa: BLE001 - collected for the assert
            errors.append((tag, exc))

    threads = [threading.Thread(target=worker, args=(f"t{i}", 2.0 ** (i + 1)))
               for i in range(6)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert not errors, errors
    assert all(value == 1.0 for value in results.values())


def test_for_over_staged_tensor_lowered_to_while():
    source = ("def main(xs):\n"
              "    total = 0.0\n"
              "    for v in xs:\n"
              "        total = total + v\n"
              "    return total\n")
    module = parse_module(source, "t.msl")
    data = TensorValue("f64", (4,), (1.5, 2.5, -1.0, 3.0))
    native, _ = interpret_module(module, "main", [data])
    outcome = trace_module(module, "main", [ParamSpec("xs", "f64", (4,))])
    staged = execute(outcome.graph, {"xs": data}).outputs[0]
    assert staged.item() == native == 6.0
    assert outcome.graph.count_ops("While") == 1


def test_list_writes_inside_staged_loop():
    source = ("def main(n):\n"
              "    xs = [1.0, 2.0]\n"
              "    i = 0\n"
              "    while i < n:\n"
              "        xs[0] = xs[0] + 1.0\n"
              "        xs[1] = xs[1] * 2.0\n"
              "        i = i + 1\n"
              "    return xs[0] + xs[1]\n")
    module = parse_module(source, "t.msl")
    native, _ = interpret_module(module, "main", [4])
    outcome = trace_module(module, "main", [ParamSpec("n", "i64")])
    staged = execute(outcome.graph, {"n": constant(4)}).outputs[0]
    assert staged.item() == native == 37.0
    assert outcome.graph.count_ops("While") == 1


def test_list_through_staged_conditional():
    source = ("def main(c):\n"
              "    xs = [1.0, 2.0, 3.0]\n"
              "    if c > 0:\n"
              "        xs[1] = 9.0\n"
              "    return xs[1]\n")
    module = parse_module(source, "t.msl")
    for c, expected in ((1, 9.0), (-1, 2.0)):
        native, _ = interpret_module(module, "main", [c])
        outcome = trace_module(module, "main", [ParamSpec("c", "i64")])
        staged = execute(outcome.graph, {"c": constant(c)}).outputs[0]
        assert staged.item() == native == expected


def test_nested_staged_loops_with_list_state():
    source = ("def main(n):\n"
              "    xs = []\n"
              "    ag.set_element_type(xs, float)\n"
              "    i = 0\n"
              "    while i < n:\n"
              "        j = 0\n"
              "        while j < n:\n"
              "            xs.append(1.0 * i + 0.5 * j)\n"
              "            j = j + 1\n"
              "        i = i + 1\n"
              "    return ag.stack(xs)\n")
    module = parse_module(source, "t.msl")
    native, _ = interpret_module(module, "main", [3])
    outcome = trace_module(module, "main", [ParamSpec("n", "i64")])
    staged = execute(outcome.graph, {"n": constant(3)}).outputs[0]
    from stagekit.graph import allclose
    assert allclose(native, staged, 1e-9)
    assert outcome.graph.count_ops("While") == 2


def test_early_return_in_staged_loop_fails_explicitly():
    # a function that may fall through cannot type its return-value slot in
    # staged loop state: conversion preserves semantics or fails explicitly
    source = ("def main(n):\n"
              "    total = 0\n"
              "    i = 0\n"
              "    while i < 10:\n"
              "        if i >= n:\n"
              "            return total\n"
              "        total = total + i\n"
              "        i = i + 1\n"
              "    total = total + 1000\n"
              "    return total\n")
    module = parse_module(source, "nest.msl")
    assert interpret_module(module, "main", [3])[0] == 3
    with pytest.raises(MslTypeError) as info:
        trace_module(module, "main", [ParamSpec("n", "i64")])
    assert info.value.span.file == "nest.msl"
    assert "staged loop" in info.value.message
