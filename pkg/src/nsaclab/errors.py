"""Exception types raised across the package."""


class NSACError(Exception):
    """Base class for errors raised by nsaclab."""


class NoTwoRarefactionSolution(NSACError):
    """End states cannot be joined by a 1-rarefaction followed by a 3-rarefaction."""


class NonConvergence(NSACError):
    """A root solve exhausted its iteration budget."""


class PositivityBreach(NSACError):
    """Specific volume or temperature became nonpositive during a run."""

    def __init__(self, field, index, t):
        self.field = field
        self.index = int(index)
        self.t = float(t)
        super().__init__(f"{field} nonpositive at cell {self.index}, t={self.t:.6g}")


class InsufficientHistory(NSACError):
    """Snapshot history too coarse for the representation-formula check."""
