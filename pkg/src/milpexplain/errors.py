"""Exception hierarchy shared across the package."""


class MilpExplainError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(MilpExplainError, ValueError):
    """Malformed document, schema violation, or out-of-domain value."""


class SolverError(MilpExplainError, RuntimeError):
    """Numerical breakdown inside the LP/MILP machinery.

    Raised instead of returning a possibly-wrong answer.
    """


class InconclusiveError(MilpExplainError, RuntimeError):
    """A search hit its node or time limit before reaching a verdict."""

    def __init__(self, message: str, nodes: int = 0, seconds: float = 0.0):
        super().__init__(message)
        self.nodes = nodes
        self.seconds = seconds


class TieMarginError(MilpExplainError, ValueError):
    """Instance rejected: its prediction margin is below the solver tolerance,
    so a strict argmax can never be certified."""
