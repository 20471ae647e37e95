"""
Exceptions raised by the numeric core.
"""


class DimensionError(ValueError):
    """Raised when operand shapes do not compose."""


class InsufficientSamplesError(ValueError):
    """Raised when a statistic needs more rows than were given."""


class ContractError(ValueError):
    """Raised when a caller breaks an operation's contract (e.g. non-scalar loss)."""


class ConvergenceError(RuntimeError):
    """Raised when an iterative solver runs out of sweeps."""

    def __init__(self, message: str, residual: float, sweeps: int):
        super().__init__(f"{message} (residual={residual:.3e}, sweeps={sweeps})")
        self.residual = residual
        self.sweeps = sweeps
