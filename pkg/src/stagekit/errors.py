"""Exception hierarchy for the whole pipeline.

Every error that can surface to a user carries an optional source span so the
CLI can report positions in the *original* file.  The phase (conversion,
staging, runtime) is decided by the driver that catches the error, not by the
class, because e.g. a type error can occur both while interpreting natively
and while executing a graph.
"""

from __future__ import annotations


class StagekitError(Exception):
    def __init__(self, message: str, span=None):
        super().__init__(message)
        self.message = message
        self.span = span


class InternalError(StagekitError):
    """A broken invariant inside the compiler itself."""


# --- syntax ---------------------------------------------------------------

class MslSyntaxError(StagekitError):
    pass


class MslIndentationError(MslSyntaxError):
    pass


# --- templates ------------------------------------------------------------

class MissingBinding(StagekitError):
    pass


class TemplateTypeMismatch(StagekitError):
    pass


class IntegrityError(StagekitError):
    pass


# --- transforms -----------------------------------------------------------

class ConversionError(StagekitError):
    def __init__(self, message: str, span=None, pass_name: str = ""):
        super().__init__(message, span)
        self.pass_name = pass_name


class DirectiveError(ConversionError):
    pass


class ListPatternError(ConversionError):
    pass


# --- runtime: dispatch and native evaluation --------------------------------

class MslTypeError(StagekitError):
    pass


class MslNameError(StagekitError):
    pass


class UndefinedSymbol(StagekitError):
    def __init__(self, symbol: str, span=None):
        super().__init__(f"variable '{symbol}' may be used before assignment", span)
        self.symbol = symbol


class DivisionByZero(StagekitError):
    pass


class IndexOutOfRange(StagekitError):
    pass


class EmptyPop(StagekitError):
    pass


class AssertionFailed(StagekitError):
    pass


class NotIterable(StagekitError):
    pass


class UnknownCallee(StagekitError):
    pass


class BranchMismatch(StagekitError):
    pass


class UndefinedBranchOutput(StagekitError):
    def __init__(self, symbol: str, span=None):
        super().__init__(
            f"staged branch returns possibly-undefined variable '{symbol}'", span)
        self.symbol = symbol


class LoopVariantType(StagekitError):
    pass


class NonBooleanTest(StagekitError):
    pass


class ElementTypeUnset(StagekitError):
    pass


class RecursionDepthExceeded(StagekitError):
    pass


class SignatureMismatch(StagekitError):
    pass


class ContextError(StagekitError):
    pass


# --- graph ------------------------------------------------------------------

class ShapeMismatch(StagekitError):
    pass


class DtypeMismatch(StagekitError):
    pass


class ValidationError(StagekitError):
    def __init__(self, violations):
        super().__init__("; ".join(violations))
        self.violations = list(violations)


class RuntimeGraphError(StagekitError):
    """Execution-time failure, tagged with the node's origin span and the
    class name of the underlying failure for error-parity checks."""

    def __init__(self, message: str, span=None, cause_kind: str = ""):
        super().__init__(message, span)
        self.cause_kind = cause_kind or type(self).__name__


class IterationLimitExceeded(RuntimeGraphError):
    def __init__(self, message: str, span=None):
        super().__init__(message, span, cause_kind="IterationLimitExceeded")


class NonDifferentiable(StagekitError):
    pass


class WhileNotDifferentiable(NonDifferentiable):
    pass
