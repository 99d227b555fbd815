"""stagekit: a staging compiler for MSL, a small imperative language with
Python syntax.  Programs convert to dispatch-call form via source
transformation; at runtime each operation either executes natively or
records nodes of a dataflow graph, which can be validated, executed,
differentiated in reverse mode, and emitted as S-expressions or DOT."""

__version__ = "0.1.0"
