"""Exception hierarchy and process exit codes shared by every package."""

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


class RipError(Exception):
    """Base class for all toolkit errors."""

    exit_code = EXIT_NUMERICAL


class ValidationError(RipError, ValueError):
    """Bad input: config, parameters or violated preconditions."""

    exit_code = EXIT_VALIDATION


class NumericalError(RipError, ArithmeticError):
    """Computation failed: non-finite state, defective matrix, failed round trip."""

    exit_code = EXIT_NUMERICAL


class DivergenceError(NumericalError):
    """Integration produced a non-finite state; carries what was computed so far."""

    def __init__(self, message: str, trace=None, time: float | None = None):
        super().__init__(message)
        self.trace = trace
        self.time = time


class TerminatedRunError(RipError):
    """A run was stopped by the arm travel limit."""

    exit_code = EXIT_NUMERICAL

    def __init__(self, message: str, trace=None, time: float | None = None):
        super().__init__(message)
        self.trace = trace
        self.time = time
