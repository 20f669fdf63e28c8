"""Exception hierarchy shared across the package."""


class MiniCpaError(Exception):
    """Base class for all package errors."""


class ParseError(MiniCpaError):
    """Syntax error in MiniC source."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{line}:{column}: {message}"
        super().__init__(message)


class SemanticError(MiniCpaError):
    """Well-formed syntax with invalid meaning (undeclared variable,
    recursion, missing main, nonlinear term, ...)."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{line}:{column}: {message}"
        super().__init__(message)


class NonlinearError(MiniCpaError):
    """A variable-times-variable product survived normalization."""


class BlowupError(MiniCpaError):
    """Intermediate constraint count exceeded the configured cap."""


class BoxTooLargeError(MiniCpaError):
    """Integer witness search box exceeds the point budget."""


class CompositionError(MiniCpaError):
    """Invalid analysis composition (location analysis missing/duplicated)."""


class ConfigError(MiniCpaError):
    """Bad key, value, or analysis name in a properties file."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class LimitExceeded(MiniCpaError):
    """Iteration or wall-time cap hit during reachability."""


class RefinementStuckError(MiniCpaError):
    """A refinement step produced no new predicate."""


class CallstackOverflowError(MiniCpaError):
    """Call nesting exceeded the callstack bound."""


class InterpError(MiniCpaError):
    """Concrete interpreter failure (uninitialized read, step budget)."""
