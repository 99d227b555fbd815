import pytest
from hypothesis import given, settings, strategies as st

from stagekit.analysis import (analyze_function, analyze_module, build_cfg,
                               dump_function, liveness, reaching_definitions)
from stagekit.analysis.activity import activity
from stagekit.analysis.dataflow import UNDEF_SITE
from stagekit.harness import FuzzSpec, gen_program
from stagekit.syntax import parse_module, qn
from helpers import oracle_live_in, oracle_reach_in


def _fn(source):
    return parse_module(source, "t.msl").slots["body"][0]


def _first_function_analysis(source):
    module = parse_module(source, "t.msl")
    return analyze_module(module)[module.slots["body"][0]]


def names(symbols):
    return sorted(str(s) for s in symbols)


# --- cfg -----------------------------------------------------------------------


def test_cfg_straight_line():
    fa = _first_function_analysis("def f(a):\n    x = a\n    y = x\n    return y\n")
    cfg = fa.cfg
    stmts = cfg.statements()
    assert cfg.succ[cfg.entry] == [stmts[0]]
    assert cfg.succ[stmts[0]] == [stmts[1]]
    assert cfg.succ[stmts[1]] == [stmts[2]]
    assert cfg.succ[stmts[2]] == [cfg.exit]
    assert cfg.succ[cfg.exit] == []


def test_cfg_while_edges():
    fa = _first_function_analysis(
        "def f(c, b):\n    while c > 0:\n        c = c - b\n    return c\n")
    cfg = fa.cfg
    while_node = next(s for s in cfg.statements() if s.kind == "While")
    body = next(s for s in cfg.statements() if s.kind == "Assign")
    ret = next(s for s in cfg.statements() if s.kind == "Return")
    assert set(cfg.succ[while_node]) == {body, ret}
    assert cfg.succ[body] == [while_node]  # back edge
    assert cfg.follow[while_node] is ret


def test_cfg_continue_targets_header():
    fa = _first_function_analysis(
        "def f(p):\n"
        "    for i in range(3):\n"
        "        if p > i:\n"
        "            continue\n"
        "        p = p + 1\n"
        "    return p\n")
    cfg = fa.cfg
    for_node = next(s for s in cfg.statements() if s.kind == "For")
    cont = next(s for s in cfg.statements() if s.kind == "Continue")
    assert cfg.succ[cont] == [for_node]


def test_cfg_break_targets_follow():
    fa = _first_function_analysis(
        "def f(p):\n"
        "    while p > 0:\n"
        "        if p > 10:\n"
        "            break\n"
        "        p = p - 1\n"
        "    return p\n")
    cfg = fa.cfg
    brk = next(s for s in cfg.statements() if s.kind == "Break")
    ret = next(s for s in cfg.statements() if s.kind == "Return")
    assert cfg.succ[brk] == [ret]


def test_cfg_edge_count_bound():
    for source in [
        "def f(a):\n    while a > 0:\n        for i in range(3):\n"
        "            a = a - i\n    return a\n",
        "def f(a):\n    if a > 0:\n        a = 1\n    else:\n        a = 2\n"
        "    return a\n",
    ]:
        cfg = build_cfg(_fn(source))
        loops = sum(1 for s in cfg.statements() if s.kind in ("While", "For"))
        assert cfg.edge_count() <= 2 * len(cfg.nodes) + loops


def test_cfg_dead_code_flagged():
    fa = _first_function_analysis(
        "def f(a):\n    return a\n    a = 1\n")
    dead = [getattr(n, "kind", None) for n in fa.cfg.dead]
    assert "Assign" in dead


# --- activity --------------------------------------------------------------------


def test_activity_compound_write():
    fn = _fn("def f(a, c):\n    a.b = c\n")
    info = activity(fn)
    stmt = fn.slots["body"].slots["stmts"][0]
    assert names(info.writes(stmt)) == ["a.b"]
    assert qn("a") not in info.writes(stmt)
    assert "c" in names(info.reads(stmt))


def test_activity_empty_function():
    fn = _fn("def f():\n    return None\n")
    info = activity(fn)
    stmt = fn.slots["body"].slots["stmts"][0]
    assert info.reads(stmt) == set() and info.writes(stmt) == set()


def test_activity_read_write_same_symbol():
    fn = _fn("def f(x, y):\n    x = x + y\n")
    info = activity(fn)
    stmt = fn.slots["body"].slots["stmts"][0]
    assert names(info.reads(stmt)) == ["x", "y"]
    assert names(info.writes(stmt)) == ["x"]


def test_activity_scope_tracks_params():
    fn = _fn("def f(a, b):\n    c = a + b\n")
    info = activity(fn)
    assert info.scope.params == {"a", "b"}
    assert qn("c") in info.scope.modified


# --- reaching definitions ----------------------------------------------------------


def test_reaching_single_def():
    fa = _first_function_analysis("def f():\n    x = 1\n    y = x\n    return y\n")
    stmts = fa.cfg.statements()
    use = stmts[1]
    defs = {d for d in fa.flow.reach_in[use] if str(d.name) == "x"
            and d.node is not UNDEF_SITE}
    assert {d.node for d in defs} == {stmts[0]}


def test_reaching_both_branch_defs():
    fa = _first_function_analysis(
        "def f(c):\n    x = 1\n    if c > 0:\n        x = 2\n    y = x\n"
        "    return y\n")
    stmts = fa.cfg.statements()
    use = next(s for s in stmts if s.kind == "Assign"
               and s.slots["target"].slots["id"] == "y")
    defs = {d.node for d in fa.flow.reach_in[use]
            if str(d.name) == "x" and d.node is not UNDEF_SITE}
    assert len(defs) == 2


def test_reaching_parameter_site():
    fa = _first_function_analysis("def f(p):\n    y = p\n    return y\n")
    stmts = fa.cfg.statements()
    sites = {d.node for d in fa.flow.reach_in[stmts[0]] if str(d.name) == "p"}
    assert sites == {"param"}


def test_defined_on_entry_must_semantics():
    fa = _first_function_analysis(
        "def f(c):\n"
        "    if c > 0:\n"
        "        x = 1\n"
        "    y = 2\n"
        "    return y\n")
    use = next(s for s in fa.cfg.statements() if s.kind == "Assign"
               and s.slots["target"].slots["id"] == "y")
    defined = names(fa.flow.defined_on_entry[use])
    assert "x" not in defined  # only maybe-defined
    assert "c" in defined


# --- liveness -----------------------------------------------------------------------


def test_liveness_live_out_of_assignment():
    fa = _first_function_analysis("def f(g):\n    x = g + 1\n    return x\n")
    assign = fa.cfg.statements()[0]
    assert "x" in names(fa.flow.live_out[assign])


def test_liveness_loop_header():
    fa = _first_function_analysis(
        "def f(x, eps):\n    while x > eps:\n        x = f(x)\n    return x\n")
    header = next(s for s in fa.cfg.statements() if s.kind == "While")
    live = names(fa.flow.live_in[header])
    assert {"x", "eps", "f"} <= set(live)


def test_liveness_dead_store():
    fa = _first_function_analysis(
        "def f():\n    x = 1\n    x = 2\n    return x\n")
    first = fa.cfg.statements()[0]
    assert "x" not in names(fa.flow.live_out[first])


# --- fixpoint / oracle properties -----------------------------------------------------


def _transfer_stable(fa):
    cfg, act, flow = fa.cfg, fa.activity, fa.flow
    from stagekit.analysis.dataflow import _kills
    for node in cfg.nodes:
        if node in (cfg.entry,):
            continue
        new_in = set()
        for pred in cfg.pred[node]:
            new_in |= flow.reach_out[pred]
        assert new_in == flow.reach_in[node]
        out = set()
        for succ in cfg.succ[node]:
            out |= flow.live_in[succ]
        assert out == flow.live_out[node]
        writes = act.writes(node)
        kept = {s for s in out if not any(_kills(w, s) for w in writes)}
        assert act.reads(node) | kept == flow.live_in[node]
    return True


def test_fixpoint_stability_on_corpus():
    import os
    from helpers import CORPUS, corpus_source
    for name in sorted(os.listdir(CORPUS)):
        if not name.endswith(".msl"):
            continue
        module = parse_module(corpus_source(name), name)
        for fa in analyze_module(module).values():
            assert _transfer_stable(fa)


def test_oracle_equivalence_small():
    source = gen_program(FuzzSpec(seed=11, feature_mask=frozenset({"if"})))
    module = parse_module(source, "t.msl")
    for fn, fa in analyze_module(module).items():
        if len(fa.cfg.nodes) > 12:
            continue
        for node in fa.cfg.statements():
            assert fa.flow.live_in[node] == oracle_live_in(fa.cfg, fa.activity,
                                                           node)
            expected = {(d.name, d.node) for d in fa.flow.reach_in[node]
                        if not d.synthetic}
            assert expected == oracle_reach_in(fa.cfg, fa.activity, node)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=2000), st.integers(0, 30))
def test_liveness_monotone_under_extra_reads(seed, pick):
    source = gen_program(FuzzSpec(seed=seed, feature_mask=frozenset({"if"})))
    module = parse_module(source, "t.msl")
    fn = next(f for f in module.slots["body"] if f.kind == "FunctionDef"
              and f.slots["name"] == "main")
    act = activity(fn)
    cfg = build_cfg(fn)
    base = liveness(cfg, act)
    stmts = cfg.statements()
    node = stmts[pick % len(stmts)]
    symbols = sorted({s for vs in act.node_reads.values() for s in vs} |
                     {s for vs in act.node_writes.values() for s in vs},
                     key=str)
    if not symbols:
        return
    extra = {node: {symbols[pick % len(symbols)]}}
    grown = liveness(cfg, act, extra_reads=extra)
    for n in cfg.nodes:
        assert base.live_in[n] <= grown.live_in[n]


def test_dump_format():
    fa = _first_function_analysis(
        "def f(x):\n    y = x + 1\n    return y\n")
    dump = dump_function(fa)
    lines = dump.strip().split("\n")
    assert lines[0].startswith("2:5 kind=Assign read={x} mod={y} ")
    assert "live_in={" in lines[0] and "reach_in_count=" in lines[0]
