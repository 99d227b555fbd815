"""The conversion pipeline: ordered, independent AST passes that rewrite MSL
into dispatch-call form.  Analyses are recomputed before every pass."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..analysis import analyze_module
from ..errors import ConversionError, InternalError
from ..syntax.ast import AstNode, origin_of, walk
from ..syntax.parser import parse_module
from . import calls, control_flow, directives, lists, lowering, simple, wrappers
from .common import PassContext

DEFAULT_PASSES = ("directives", "break", "continue", "return", "assert",
                  "lists", "slices", "calls", "control_flow", "ternary",
                  "logical", "wrappers")

_PASS_TABLE = {
    "directives": directives.run,
    "break": lowering.run_break,
    "continue": lowering.run_continue,
    "return": lowering.run_return,
    "assert": simple.run_assert,
    "lists": lists.run,
    "slices": simple.run_slices,
    "calls": calls.run,
    "control_flow": control_flow.run,
    "ternary": simple.run_ternary,
    "logical": simple.run_logical,
    "wrappers": wrappers.run,
}


@dataclass
class PassConfig:
    recursive: bool = True
    backend: str = "graph"  # graph | sexpr
    passes_enabled: tuple = DEFAULT_PASSES

    def __post_init__(self):
        unknown = [p for p in self.passes_enabled if p not in _PASS_TABLE]
        if unknown:
            raise InternalError(f"unknown pass(es): {unknown}")
        if self.backend not in ("graph", "sexpr"):
            raise InternalError(f"unknown backend {self.backend!r}")


@dataclass
class TransformResult:
    module: AstNode
    source_map: dict = field(default_factory=dict)  # node uid -> SourceSpan
    report: list = field(default_factory=list)


def convert(module: AstNode, config: PassConfig | None = None) -> TransformResult:
    config = config or PassConfig()
    ctx = PassContext()
    current = module
    for pass_name in config.passes_enabled:
        analyses = analyze_module(current)
        before = sum(1 for _ in walk(current))
        try:
            current = _PASS_TABLE[pass_name](current, analyses, ctx)
        except ConversionError as exc:
            if not exc.pass_name:
                exc.pass_name = pass_name
            raise
        after = sum(1 for _ in walk(current))
        if after != before:
            ctx.note(pass_name, f"{before} -> {after} nodes")
    if config.passes_enabled == DEFAULT_PASSES:
        _check_postconditions(current)
    for node in walk(current):
        if node.kind == "FunctionDef":
            node.annotations["converted"] = True
    source_map = {node.uid: origin_of(node) for node in walk(current)}
    return TransformResult(current, source_map, ctx.report)


def run_single_pass(module: AstNode, pass_name: str,
                    ctx: PassContext | None = None) -> AstNode:
    analyses = analyze_module(module)
    return _PASS_TABLE[pass_name](module, analyses, ctx or PassContext())


def convert_source(source: str, file_name: str = "<input>",
                   config: PassConfig | None = None) -> TransformResult:
    return convert(parse_module(source, file_name), config)


def _check_postconditions(module: AstNode):
    for fn in walk(module):
        if fn.kind != "FunctionDef":
            continue
        returns = 0
        for node in _own_nodes(fn):
            if node.kind in ("If", "While", "For", "Break", "Continue"):
                raise InternalError(
                    f"{node.kind} survived conversion in {fn.slots['name']!r}")
            if node.kind == "Return":
                returns += 1
        if returns != 1:
            raise InternalError(
                f"function {fn.slots['name']!r} has {returns} returns after "
                f"conversion")


def _own_nodes(fn: AstNode):
    """Nodes of a function excluding nested FunctionDef bodies."""
    def visit(node):
        for child in node.children():
            if child.kind == "FunctionDef":
                yield child
                continue
            yield child
            yield from visit(child)

    yield from visit(fn.slots["body"])
