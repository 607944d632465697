"""Error taxonomy shared by the whole package.

The CLI maps these onto process exit codes, so keep the hierarchy flat
and predictable: anything wrong with user input derives from SpecError,
anything wrong with a numerical solve derives from SolverError.
"""


class SpecError(ValueError):
    """Base class for problems with a motor spec document."""


class SpecFormatError(SpecError):
    """Document cannot be parsed or has unknown/missing/ill-typed fields."""

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class SpecInvariantError(SpecError):
    """Parsed fine but violates a named physical or structural rule."""

    def __init__(self, rule: str, message: str):
        self.rule = rule
        super().__init__(f"[{rule}] {message}")


class MeasurementFormatError(SpecError):
    """Measurement CSV is malformed; carries the 1-based line number when
    the problem is tied to a specific line."""

    def __init__(self, line: int | None, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class SolverError(RuntimeError):
    """Base class for numerical failures."""


class ConvergenceError(SolverError):
    """Iteration failed to meet its convergence criterion."""

    def __init__(self, message: str, residual: float | None = None):
        self.residual = residual
        super().__init__(message)
