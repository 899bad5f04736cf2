"""Diagnostics shared across the toolchain."""


class CompileError(Exception):
    """Rejection during tokenizing, parsing or adjoint synthesis.

    Rendered as ``error[<code>]: <message> at line <n>``.
    """

    def __init__(self, code: str, message: str, line: int):
        self.code = code
        self.message = message
        self.line = line
        super().__init__(f"error[{code}]: {message} at line {line}")


class CompileWarning(UserWarning):
    """Non-fatal compile-time diagnostic (e.g. redundant pragma)."""


class SLRuntimeError(Exception):
    """Failure while executing a target program."""


class TapeUnderflow(SLRuntimeError):
    """Pop from an empty tape stack; signals a compiler bug or corrupted pragma usage."""


class TapeImbalance(SLRuntimeError):
    """Tape stacks not empty after an adjoint execution finished."""


class KinkError(SLRuntimeError):
    """Raised under strict-kinks mode when d_gt0 is evaluated inside the smoothing band."""
