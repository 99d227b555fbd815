"""Differential execution: native semantics vs converted-native vs staged
graph execution, plus the golden-corpus runner.

A program matches when all three executions agree on outputs (exact for
ints and bools, 1e-9 relative for floats) and on the print log; executions
that fail must fail everywhere with the same error class to count as a
match-by-error.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

from ..errors import (ConversionError, MslSyntaxError, RuntimeGraphError,
                      StagekitError)
from ..feeds import parse_tree
from ..graph import allclose, execute
from ..graph.dot import to_dot
from ..graph.sexpr import to_sexpr
from ..graph.tensor import ListValue, TensorValue, Tree
from ..runtime import MslList, ParamSpec, interpret_module, trace_module
from ..syntax.ast import AstNode
from ..syntax.parser import parse_module
from ..syntax.unparse import unparse
from ..transforms import PassConfig, convert
from .fuzz import FuzzSpec, gen_inputs, gen_program_with_params

REL_TOL = 1e-9


@dataclass
class DiffReport:
    program: str
    inputs: list
    native: object = None
    staged: object = None
    verdict: str = "match"
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.verdict == "match"


@dataclass
class _Execution:
    outputs: list = field(default_factory=list)
    log: list = field(default_factory=list)
    error: str = ""  # error class name when the run failed


def _spec_for(name: str, value) -> ParamSpec:
    if isinstance(value, bool):
        return ParamSpec(name, "bool")
    if isinstance(value, int):
        return ParamSpec(name, "i64")
    if isinstance(value, float):
        return ParamSpec(name, "f64")
    if isinstance(value, TensorValue):
        return ParamSpec(name, value.dtype, value.shape)
    if isinstance(value, Tree):
        return ParamSpec(name, "tree")
    raise StagekitError(f"no parameter spec for {type(value).__name__}")


def _normalize(value) -> list:
    """Flatten an execution result to a list of comparable leaves."""
    if value is None:
        return []
    if isinstance(value, MslList):
        out = []
        for item in value.items:
            out.extend(_normalize(item))
        return out
    if isinstance(value, ListValue):
        out = []
        for item in value.items:
            out.extend(_normalize(item))
        return out
    return [value]


def _leaf_equal(a, b) -> bool:
    if isinstance(a, TensorValue) and a.shape == ():
        a = a.item()
    if isinstance(b, TensorValue) and b.shape == ():
        b = b.item()
    if isinstance(a, TensorValue) or isinstance(b, TensorValue):
        if not (isinstance(a, TensorValue) and isinstance(b, TensorValue)):
            return False
        return allclose(a, b, REL_TOL)
    if isinstance(a, bool) or isinstance(b, bool):
        return a is b
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        if isinstance(a, float) or isinstance(b, float):
            if math.isnan(a) and math.isnan(b):
                return True
            if math.isinf(a) or math.isinf(b):
                return a == b
            return abs(a - b) <= REL_TOL * max(1.0, abs(a), abs(b))
        return a == b
    return a == b


def _outputs_equal(a: list, b: list) -> bool:
    return len(a) == len(b) and all(_leaf_equal(x, y) for x, y in zip(a, b))


def _leaf_identical(a, b) -> bool:
    """Bit-for-bit: conversion preserves operation order, so the converted
    program must reproduce native floats exactly."""
    if isinstance(a, TensorValue) and a.shape == ():
        a = a.item()
    if isinstance(b, TensorValue) and b.shape == ():
        b = b.item()
    if isinstance(a, TensorValue) or isinstance(b, TensorValue):
        if not (isinstance(a, TensorValue) and isinstance(b, TensorValue)):
            return False
        if a.dtype != b.dtype or a.shape != b.shape:
            return False
        return all(_leaf_identical(x, y) for x, y in zip(a.data, b.data))
    if isinstance(a, bool) or isinstance(b, bool):
        return a is b
    if isinstance(a, float) and isinstance(b, float):
        return (a == b) or (math.isnan(a) and math.isnan(b))
    return type(a) is type(b) and a == b


def _outputs_identical(a: list, b: list) -> bool:
    return len(a) == len(b) and all(_leaf_identical(x, y) for x, y in zip(a, b))


def _run_native(module: AstNode, entry: str, inputs: list) -> _Execution:
    try:
        result, log = interpret_module(module, entry, inputs)
        return _Execution(_normalize(result), log)
    except StagekitError as exc:
        return _Execution(error=type(exc).__name__)


def _run_staged(module: AstNode, entry: str, inputs: list, mode: str,
                config: PassConfig, pre_converted) -> _Execution:
    try:
        if mode == "staged_params":
            params = [_spec_for(f"p{i}", v) for i, v in enumerate(inputs)]
            outcome = trace_module(module, entry, params, config,
                                   pre_converted=pre_converted)
            feeds = {f"p{i}": v for i, v in enumerate(inputs)}
        else:
            outcome = trace_module(module, entry, config=config,
                                   pre_converted=pre_converted, args=inputs)
            feeds = {}
        result = execute(outcome.graph, feeds)
        flat = []
        for value in result.outputs:
            flat.extend(_normalize(value))
        return _Execution(flat, result.print_log)
    except RuntimeGraphError as exc:
        return _Execution(error=exc.cause_kind)
    except StagekitError as exc:
        return _Execution(error=type(exc).__name__)


def diff_one(source: str, inputs: list, mode: str = "staged_params",
             entry: str = "main", module: AstNode | None = None,
             converted=None, backend: str = "graph") -> DiffReport:
    report = DiffReport(source, list(inputs))
    try:
        module = module or parse_module(source, "<fuzz>")
    except MslSyntaxError as exc:
        report.verdict = "conversion_error"
        report.detail = f"parse: {exc.message}"
        return report

    native = _run_native(module, entry, inputs)
    report.native = native.outputs

    try:
        config = PassConfig(backend=backend)
        converted = converted or convert(module, config)
    except ConversionError as exc:
        report.verdict = "conversion_error"
        report.detail = exc.message
        return report

    converted_native = _run_native(converted.module, entry, inputs)
    staged = _run_staged(module, entry, inputs, mode, config, converted)
    report.staged = staged.outputs

    runs = {"native": native, "converted": converted_native, "staged": staged}
    errors = {name: run.error for name, run in runs.items() if run.error}
    if errors:
        classes = set(errors.values())
        if len(errors) == 3 and len(classes) == 1:
            report.detail = f"all fail with {classes.pop()}"
            return report  # match by error
        report.verdict = "staging_error" if "staged" in errors and \
            not native.error else "mismatch"
        report.detail = "; ".join(f"{k}:{v}" for k, v in sorted(errors.items()))
        if native.error and not staged.error:
            report.verdict = "mismatch"
        return report

    if not _outputs_identical(native.outputs, converted_native.outputs):
        report.verdict = "mismatch"
        report.detail = "native vs converted-native outputs differ (bit-exact)"
    elif not _outputs_equal(native.outputs, staged.outputs):
        report.verdict = "mismatch"
        report.detail = "native vs staged outputs differ"
    elif native.log != converted_native.log:
        report.verdict = "mismatch"
        report.detail = "print logs differ (native vs converted)"
    elif native.log != staged.log:
        report.verdict = "mismatch"
        report.detail = "print logs differ (native vs staged)"
    return report


def diff_seed(seed: int, spec: FuzzSpec | None = None, vectors: int = 3) -> list:
    """Replayable differential runs for one seed: both modes x input vectors.
    The program is parsed and converted once and shared across runs."""
    spec = spec or FuzzSpec(seed=seed)
    if spec.seed != seed:
        spec = FuzzSpec(seed, spec.max_stmts, spec.max_depth,
                        spec.max_loop_bound, spec.feature_mask)
    source, param_kinds = gen_program_with_params(spec)
    module = None
    converted = None
    try:
        module = parse_module(source, "<fuzz>")
        converted = convert(module, PassConfig())
    except StagekitError:
        pass  # diff_one reports the failure per run
    reports = []
    for vector in range(vectors):
        inputs = gen_inputs(param_kinds, seed * 1000 + vector)
        for mode in ("concrete", "staged_params"):
            report = diff_one(source, inputs, mode, module=module,
                              converted=converted)
            report.detail = f"seed={seed} vector={vector} mode={mode} " \
                            + report.detail
            reports.append(report)
    return reports


# --- corpus runner ---------------------------------------------------------------


@dataclass
class CorpusSummary:
    total: int = 0
    passed: int = 0
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def fail(self, name: str, message: str):
        self.failures.append(f"{name}: {message}")


def _manifest_value(spec: dict):
    import random
    dtype = spec["dtype"]
    if dtype == "tree":
        return parse_tree(spec["data"])
    shape = tuple(spec.get("shape", ()))
    if "data" in spec:
        data = tuple(spec["data"])
        if dtype == "f64":
            data = tuple(float(v) for v in data)
        return TensorValue(dtype, shape, data)
    rng = random.Random(spec["seed"])
    count = 1
    for d in shape:
        count *= d
    low, high = spec.get("low", -1.0), spec.get("high", 1.0)
    if dtype == "i64":
        data = tuple(rng.randint(int(low), int(high)) for _ in range(count))
    else:
        data = tuple(rng.uniform(low, high) for _ in range(count))
    return TensorValue(dtype, shape, data)


def run_corpus(directory: str) -> CorpusSummary:
    summary = CorpusSummary()
    manifest_path = os.path.join(directory, "manifest.json")
    if not os.path.exists(manifest_path):
        return summary
    with open(manifest_path) as handle:
        manifest = json.load(handle)
    for program in manifest["programs"]:
        summary.total += 1
        name = program["name"]
        try:
            _run_corpus_program(directory, program, summary)
        except StagekitError as exc:
            summary.fail(name, f"{type(exc).__name__}: {exc.message}")
        else:
            if not any(f.startswith(name + ":") for f in summary.failures):
                summary.passed += 1
    return summary


def _run_corpus_program(directory: str, program: dict, summary: CorpusSummary):
    name = program["name"]
    path = os.path.join(directory, program["file"])
    with open(path) as handle:
        source = handle.read()
    module = parse_module(source, program["file"])
    config = PassConfig(backend=program.get("backend", "graph"))
    converted = convert(module, config)

    golden_dir = os.path.join(directory, "golden")
    _check_golden(summary, name, os.path.join(golden_dir, f"{name}.converted.msl"),
                  unparse(converted.module))

    entry = program["entry"]
    params = [ParamSpec(p["name"], p["dtype"], tuple(p.get("shape", ())))
              for p in program["params"]]
    feeds = {p["name"]: _manifest_value(p) for p in program["params"]}
    inputs = [feeds[p["name"]] for p in program["params"]]

    outcome = trace_module(module, entry, params, config, pre_converted=converted)
    _check_golden(summary, name, os.path.join(golden_dir, f"{name}.sexpr"),
                  to_sexpr(outcome.graph))
    _check_golden(summary, name, os.path.join(golden_dir, f"{name}.dot"),
                  to_dot(outcome.graph))

    native = _run_native(module, entry, inputs)
    converted_native = _run_native(converted.module, entry, inputs)
    try:
        result = execute(outcome.graph, feeds)
        staged_outputs = []
        for value in result.outputs:
            staged_outputs.extend(_normalize(value))
        staged = _Execution(staged_outputs, result.print_log)
    except StagekitError as exc:
        staged = _Execution(error=type(exc).__name__)

    if native.error or converted_native.error or staged.error:
        summary.fail(name, f"execution errors: native={native.error!r} "
                           f"converted={converted_native.error!r} "
                           f"staged={staged.error!r}")
        return
    if not _outputs_identical(native.outputs, converted_native.outputs):
        summary.fail(name, "native vs converted-native mismatch")
    if not _outputs_equal(native.outputs, staged.outputs):
        summary.fail(name, "native vs staged mismatch")
    if native.log != converted_native.log or native.log != staged.log:
        summary.fail(name, "print log mismatch")


def _check_golden(summary: CorpusSummary, name: str, path: str, actual: str):
    if not os.path.exists(path):
        summary.fail(name, f"missing golden file {path}")
        return
    with open(path) as handle:
        expected = handle.read()
    if expected != actual:
        summary.fail(name, f"golden mismatch: {path}")
