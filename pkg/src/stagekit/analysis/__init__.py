"""Static analyses run before each conversion pass: CFG, activity, reaching
definitions and liveness.  Everything is recomputed from scratch per pass;
results live in side tables keyed by node identity."""

from __future__ import annotations

from dataclasses import dataclass

from .activity import ActivityInfo, ActivityScope, activity, expr_reads, target_activity
from .cfg import Cfg, build_cfg
from .dataflow import DefSite, FlowFacts, liveness, reaching_definitions
from ..syntax.ast import AstNode, walk


@dataclass
class FunctionAnalysis:
    fn: AstNode
    cfg: Cfg
    activity: ActivityInfo
    flow: FlowFacts


def analyze_function(fn: AstNode) -> FunctionAnalysis:
    act = activity(fn)
    cfg = build_cfg(fn)
    facts = reaching_definitions(cfg, act)
    liveness(cfg, act, facts)
    return FunctionAnalysis(fn, cfg, act, facts)


def analyze_module(module: AstNode) -> dict:
    """FunctionAnalysis for every function in the module, nested ones included."""
    out = {}
    for node in walk(module):
        if node.kind == "FunctionDef":
            out[node] = analyze_function(node)
    return out


def dump_function(analysis: FunctionAnalysis) -> str:
    """One line per statement: the ``analyze`` CLI format."""
    lines = []
    for node in analysis.cfg.statements():
        span = node.span
        reads = _names(analysis.activity.reads(node))
        mods = _names(analysis.activity.writes(node))
        lin = _names(analysis.flow.live_in.get(node, set()))
        lout = _names(analysis.flow.live_out.get(node, set()))
        count = len(analysis.flow.reach_in.get(node, set()))
        lines.append(
            f"{span.start_line}:{span.start_col} kind={node.kind} "
            f"read={reads} mod={mods} live_in={lin} live_out={lout} "
            f"reach_in_count={count}")
    return "\n".join(lines) + "\n"


def _names(symbols) -> str:
    return "{" + ",".join(sorted(str(s) for s in symbols)) + "}"


__all__ = [
    "ActivityInfo", "ActivityScope", "activity", "expr_reads",
    "target_activity", "Cfg", "build_cfg", "DefSite", "FlowFacts",
    "liveness", "reaching_definitions", "FunctionAnalysis",
    "analyze_function", "analyze_module", "dump_function",
]
