"""Exception types shared across the package."""


class NLFKPPError(Exception):
    """Base class."""


class ParameterError(NLFKPPError, ValueError):
    """A parameter lies outside its admissible range."""


class InputError(NLFKPPError, ValueError):
    """Malformed or inconsistent input data."""


class GridMismatchError(InputError):
    """Two fields on different grids were combined."""


class KernelParseError(InputError):
    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line


class KernelAssumptionError(NLFKPPError):
    """A kernel violates nonnegativity or unit mass."""

    def __init__(self, failed, report=None):
        super().__init__("kernel assumption violated: " + "; ".join(failed))
        self.failed = list(failed)
        self.report = report


class BlowUpError(NLFKPPError, FloatingPointError):
    def __init__(self, step_index, message="non-finite values"):
        super().__init__(f"{message} at step {step_index}")
        self.step_index = step_index


class DomainTooSmallWarning(UserWarning):
    """Kernel mass beyond the box half-width exceeds the tail tolerance."""
