"""Exception hierarchy shared by every module."""


class ReliabilityError(Exception):
    """Base class for all errors raised by krelnet."""


class ContractViolation(ReliabilityError, ValueError):
    """An operation was called with inputs violating its precondition."""


class InvalidArgument(ReliabilityError, ValueError):
    pass


class InstanceParseError(ReliabilityError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ResourceLimitError(ReliabilityError):
    """Exact enumeration would exceed the configured size limit."""


class CounterError(ReliabilityError):
    """An external model counter failed or produced no parseable count."""

    def __init__(self, message, stdout="", stderr="", returncode=None):
        self.stdout = stdout
        self.stderr = stderr
        self.returncode = returncode
        super().__init__(message)


class NumericError(ReliabilityError, ArithmeticError):
    pass


class DegenerateMeanError(ReliabilityError, ArithmeticError):
    """A trial estimate of the mean came out as zero."""
