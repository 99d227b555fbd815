"""Command-line entry point.

Exit codes: 0 success, 1 usage, 2 conversion failed, 3 staging failed,
4 runtime failed.  Diagnostics go to standard error as
``<file>:<line>:<col>: <phase>: <message>`` with spans referring to the
user's original file.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .errors import (ConversionError, MslSyntaxError, RuntimeGraphError,
                     StagekitError)
from .feeds import FeedSyntaxError, parse_feed, parse_param_spec
from .graph import execute
from .graph.dot import to_dot
from .graph.grad import gradient
from .graph.sexpr import to_sexpr
from .graph.tensor import TensorValue, format_scalar
from .harness import FuzzSpec, diff_seed, run_corpus
from .harness.fuzz import ALL_FEATURES
from .analysis import analyze_module, dump_function
from .runtime import ParamSpec, interpret_module, trace_module
from .runtime.values import format_value
from .syntax.ast import AstNode
from .syntax.parser import parse_module
from .syntax.pretty import pretty_print
from .syntax.unparse import unparse
from .transforms import DEFAULT_PASSES, PassConfig, convert, run_single_pass

EXIT_USAGE = 1
EXIT_CONVERSION = 2
EXIT_STAGING = 3
EXIT_RUNTIME = 4

_PHASE_EXIT = {"conversion": EXIT_CONVERSION, "staging": EXIT_STAGING,
               "runtime": EXIT_RUNTIME}


class CliError(StagekitError):
    def __init__(self, phase: str, message: str, span=None):
        super().__init__(message, span)
        self.phase = phase


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _report(file_name: str, error: CliError) -> int:
    span = error.span
    line = span.start_line if span is not None and not span.is_generated else 1
    col = span.start_col if span is not None and not span.is_generated else 1
    print(f"{file_name}:{line}:{col}: {error.phase}: {error.message}",
          file=sys.stderr)
    return _PHASE_EXIT[error.phase]


def _load(path: str) -> tuple[str, AstNode]:
    try:
        with open(path) as handle:
            source = handle.read()
    except OSError as exc:
        raise CliError("conversion", f"cannot read {path}: {exc.strerror}")
    try:
        return source, parse_module(source, path)
    except MslSyntaxError as exc:
        raise CliError("conversion", exc.message, exc.span)


def _convert(module: AstNode, config: PassConfig):
    try:
        return convert(module, config)
    except ConversionError as exc:
        label = f"{exc.pass_name}: {exc.message}" if exc.pass_name else exc.message
        raise CliError("conversion", label, exc.span)
    except StagekitError as exc:
        raise CliError("conversion", exc.message, exc.span)


def _trace(module, entry, params, config):
    try:
        return trace_module(module, entry, params, config)
    except CliError:
        raise
    except RuntimeGraphError as exc:
        raise CliError("runtime", exc.message, exc.span)
    except ConversionError as exc:
        raise CliError("conversion", exc.message, exc.span)
    except StagekitError as exc:
        raise CliError("staging", exc.message, exc.span)


def _execute(graph, feeds):
    try:
        return execute(graph, feeds)
    except RuntimeGraphError as exc:
        raise CliError("runtime", exc.message, exc.span)
    except StagekitError as exc:
        raise CliError("runtime", exc.message, exc.span)


def _print_outputs(outputs, log):
    for line in log:
        print(line)
    for value in outputs:
        print(format_value(value))


# --- subcommands ---------------------------------------------------------------


def cmd_convert(args) -> int:
    source, module = _load(args.file)
    if args.passes:
        unknown = [p for p in args.passes if p not in DEFAULT_PASSES]
        if unknown:
            raise CliError("conversion", f"unknown pass(es): {unknown}")
        current = module
        from .transforms.common import PassContext
        ctx = PassContext()
        for name in args.passes:
            current = run_single_pass(current, name, ctx)
        result_module = current
    else:
        result_module = _convert(module, PassConfig()).module
    if args.emit == "ast":
        sys.stdout.write(pretty_print(result_module))
    else:
        sys.stdout.write(unparse(result_module))
    return 0


def cmd_analyze(args) -> int:
    _, module = _load(args.file)
    analyses = analyze_module(module)
    if not analyses:
        return 0
    for fn, analysis in analyses.items():
        print(f"function {fn.slots['name']}")
        if args.analysis == "cfg":
            for node in analysis.cfg.nodes:
                label = getattr(node, "kind", None) or str(node)
                succs = [getattr(s, "kind", None) or str(s)
                         for s in analysis.cfg.succ[node]]
                print(f"  {label} -> {', '.join(succs) if succs else '-'}")
        else:
            sys.stdout.write(dump_function(analysis))
    return 0


def cmd_run(args) -> int:
    source, module = _load(args.file)
    if args.mode == "interpret":
        values = [_parse_feed_arg(a)[1] for a in args.arg]
        try:
            result, log = interpret_module(module, args.entry, values)
        except StagekitError as exc:
            raise CliError("runtime", exc.message, exc.span)
        _print_outputs([] if result is None else [result], log)
        return 0
    feeds = dict(_parse_feed_arg(a) for a in (args.feed or args.arg))
    params = []
    for name, value in feeds.items():
        if isinstance(value, TensorValue):
            params.append(ParamSpec(name, value.dtype, value.shape))
        else:
            params.append(ParamSpec(name, "tree"))
    config = PassConfig(backend=args.backend)
    outcome = _trace(module, args.entry, params, config)
    result = _execute(outcome.graph, feeds)
    _print_outputs(result.outputs, result.print_log)
    return 0


def _parse_feed_arg(text: str):
    try:
        return parse_feed(text)
    except FeedSyntaxError as exc:
        raise CliError("staging", exc.message)


def cmd_graph(args) -> int:
    source, module = _load(args.file)
    params = []
    for spec_text in args.param:
        try:
            name, spec = parse_param_spec(spec_text)
        except FeedSyntaxError as exc:
            raise CliError("staging", exc.message)
        params.append(ParamSpec(name, spec.dtype, spec.shape or ()))
    config = PassConfig(backend=args.backend)
    outcome = _trace(module, args.entry, params, config)
    if args.emit == "dot":
        sys.stdout.write(to_dot(outcome.graph))
    else:
        sys.stdout.write(to_sexpr(outcome.graph))
    return 0


def cmd_grad(args) -> int:
    source, module = _load(args.file)
    feeds = dict(_parse_feed_arg(a) for a in args.at)
    params = []
    for name, value in feeds.items():
        if isinstance(value, TensorValue):
            params.append(ParamSpec(name, value.dtype, value.shape))
        else:
            params.append(ParamSpec(name, "tree"))
    for wrt in args.wrt:
        if wrt not in feeds:
            print(f"stagekit grad: error: --wrt {wrt}: no such parameter; "
                  f"give it a value with --at", file=sys.stderr)
            sys.exit(EXIT_USAGE)
    config = PassConfig(backend=args.backend)
    outcome = _trace(module, args.entry, params, config)
    try:
        extended = gradient(outcome.graph, 0, list(args.wrt))
    except StagekitError as exc:
        raise CliError("staging", exc.message, exc.span)
    result = _execute(extended, feeds)
    n_primal = len(outcome.graph.outputs)
    for value in result.outputs[:n_primal]:
        print(f"value: {format_value(value)}")
    for name, value in zip(args.wrt, result.outputs[n_primal:]):
        print(f"d/d{name}: {format_value(value)}")
    return 0


def cmd_fuzz(args) -> int:
    features = ALL_FEATURES if not args.features else \
        frozenset(args.features.split(","))
    failures = 0
    for seed in range(args.seed, args.seed + args.count):
        spec = FuzzSpec(seed=seed, feature_mask=features)
        for report in diff_seed(seed, spec):
            if not report.ok:
                failures += 1
                with open(f"{seed}.msl", "w") as handle:
                    handle.write(report.program)
                with open(f"{seed}.report.txt", "w") as handle:
                    handle.write(f"verdict: {report.verdict}\n"
                                 f"detail: {report.detail}\n"
                                 f"inputs: {report.inputs!r}\n")
                print(f"seed {seed}: {report.verdict} ({report.detail})",
                      file=sys.stderr)
                break
    print(f"{args.count} seed(s), {failures} failure(s)")
    return 0 if failures == 0 else EXIT_RUNTIME


def cmd_corpus(args) -> int:
    summary = run_corpus(args.dir)
    for failure in summary.failures:
        print(failure, file=sys.stderr)
    print(f"{summary.passed}/{summary.total} corpus program(s) passed")
    return 0 if summary.ok else EXIT_RUNTIME


def build_parser() -> _Parser:
    parser = _Parser(prog="stagekit",
                     description="staging compiler for the MSL language")
    parser.add_argument("--version", action="version",
                        version=f"stagekit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="convert a module to dispatch-call form")
    p.add_argument("file")
    p.add_argument("--emit", choices=("source", "ast"), default="source")
    p.add_argument("--pass", dest="passes", action="append", default=[],
                   metavar="NAME", help="run only the named pass(es), in order")
    p.set_defaults(fn=cmd_convert)

    p = sub.add_parser("analyze", help="dump dataflow analysis facts")
    p.add_argument("file")
    p.add_argument("--pass", dest="analysis", default="all",
                   choices=("all", "cfg", "liveness", "reaching", "activity"))
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("run", help="execute a program")
    p.add_argument("file")
    p.add_argument("--entry", default="main")
    p.add_argument("--mode", choices=("interpret", "staged"), default="interpret")
    p.add_argument("--backend", choices=("graph", "sexpr"), default="graph")
    p.add_argument("--arg", action="append", default=[], metavar="NAME=SPEC")
    p.add_argument("--feed", action="append", default=[], metavar="NAME=SPEC")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("graph", help="trace and emit the graph IR")
    p.add_argument("file")
    p.add_argument("--entry", default="main")
    p.add_argument("--backend", choices=("graph", "sexpr"), default="graph")
    p.add_argument("--emit", choices=("sexpr", "dot"), default="sexpr")
    p.add_argument("--param", action="append", default=[], metavar="NAME=TYPE")
    p.set_defaults(fn=cmd_graph)

    p = sub.add_parser("grad", help="reverse-mode gradient of the entry output")
    p.add_argument("file")
    p.add_argument("--entry", default="main")
    p.add_argument("--backend", choices=("graph", "sexpr"), default="graph")
    p.add_argument("--wrt", action="append", default=[], metavar="NAME",
                   required=False)
    p.add_argument("--at", action="append", default=[], metavar="NAME=FEED")
    p.set_defaults(fn=cmd_grad)

    p = sub.add_parser("fuzz", help="differential fuzzing sweep")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--features", default="")
    p.set_defaults(fn=cmd_fuzz)

    p = sub.add_parser("corpus", help="run the golden corpus")
    p.add_argument("dir")
    p.set_defaults(fn=cmd_corpus)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    file_name = getattr(args, "file", "<cli>")
    try:
        return args.fn(args)
    except CliError as exc:
        return _report(file_name, exc)
    except StagekitError as exc:  # uncategorized: treat as runtime
        return _report(file_name, CliError("runtime", exc.message, exc.span))


if __name__ == "__main__":
    sys.exit(main())
