"""Dynamic dispatch runtime: native interpretation, staging, and the trace
entry points used by the CLI and the differential harness."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..errors import MslTypeError, StagekitError
from ..graph.ir import Graph, TypeSpec, TREE
from ..syntax.ast import AstNode
from ..syntax.parser import parse_module
from ..transforms import PassConfig, TransformResult, convert
from . import dispatch
from .calls import converted_call, stage_call
from .interp import Interpreter
from .trace import TraceContext, current_context, tracing
from .values import (Builtin, Closure, MslList, RangeVal, Staged,
                     UndefinedValue, format_value, is_staged)


@dataclass(frozen=True)
class ParamSpec:
    name: str
    dtype: str                      # i64 | f64 | bool | tree
    shape: tuple = ()               # dims, None entries are dynamic

    def type_spec(self) -> TypeSpec:
        if self.dtype == "tree":
            return TREE
        return TypeSpec(self.dtype, tuple(self.shape))


@dataclass
class TraceOutcome:
    graph: Graph
    converted: TransformResult
    interp: Interpreter


def interpret_module(module: AstNode, entry: str, args: list,
                     file_name: str = "<module>"):
    """Native execution; returns (result, print log)."""
    interp = Interpreter(module, file_name)
    result = interp.call_function(entry, list(args))
    return result, list(interp.print_log)


def trace_module(module: AstNode, entry: str, params: list | None = None,
                 config: Optional[PassConfig] = None,
                 pre_converted: Optional[TransformResult] = None,
                 args: list | None = None) -> TraceOutcome:
    """Convert a module and trace its entry function.

    With ``params`` the entry runs on staged placeholders; with ``args`` it
    runs on the given concrete values under the trace (dispatch then folds
    everything it can into constants)."""
    config = config or PassConfig()
    converted = pre_converted or convert(module, config)
    interp = Interpreter(converted.module, "<converted>")
    ctx = TraceContext(backend=config.backend)
    with tracing(ctx):
        if args is not None:
            call_args = list(args)
        else:
            call_args = [ctx.add_param(p.name, p.type_spec())
                         for p in (params or [])]
        closure = interp.globals.lookup(entry)
        if not isinstance(closure, Closure):
            raise MslTypeError(f"{entry!r} is not a function")
        if config.backend == "sexpr" and args is None:
            result = converted_call(closure, call_args)
        else:
            result = interp.call_closure(closure, call_args)
        ctx.graph.main.outputs = _collect_outputs(ctx, result)
    return TraceOutcome(ctx.graph, converted, interp)


def _collect_outputs(ctx: TraceContext, result) -> list:
    if result is None:
        return []
    if isinstance(result, MslList):
        return [ctx.stage(v).ref for v in result.items]
    return [ctx.stage(result).ref]


__all__ = [
    "Builtin", "Closure", "Interpreter", "MslList", "ParamSpec", "RangeVal",
    "Staged", "TraceContext", "TraceOutcome", "UndefinedValue",
    "converted_call", "current_context", "dispatch", "format_value",
    "interpret_module", "is_staged", "stage_call", "trace_module", "tracing",
]
