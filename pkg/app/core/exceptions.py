"""Exception hierarchy shared by the simulator, the oracle and the CLI."""

from typing import Optional


class BufferPAError(Exception):
    """Base class for every error raised deliberately by this package."""


class ParameterError(BufferPAError, ValueError):
    pass


class IterationIndexError(BufferPAError, IndexError):
    pass


class TraceFormatError(BufferPAError, ValueError):
    """A trace file line that cannot be parsed or breaks the trace invariants."""

    def __init__(self, message: str, line: Optional[int] = None, path: Optional[str] = None):
        self.line = line
        self.path = path
        where = ""
        if path:
            where += f"{path}"
        if line is not None:
            where += f":{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)


class EvaluatorError(BufferPAError, RuntimeError):
    def __init__(self, iteration: int, k: int, cause: BaseException):
        self.iteration = iteration
        self.k = k
        super().__init__(f"evaluator failed at iteration {iteration} (k={k}): {cause}")


class ArtifactError(BufferPAError, OSError):
    def __init__(self, path: str, cause: BaseException):
        self.path = path
        super().__init__(f"cannot access artifact {path}: {cause}")
