"""Exception types raised across the package."""

from __future__ import annotations


class GridStoreError(Exception):
    """Base class for every error raised by this package."""


class InvalidScenario(GridStoreError):
    """A scenario violates one or more construction invariants.

    Carries the failed checks so callers can report every violation at
    once instead of stopping at the first.
    """

    def __init__(self, failures):
        self.failures = list(failures)
        lines = "; ".join(f"{c.code}: {c.detail}" for c in self.failures)
        super().__init__(f"invalid scenario ({lines})")


class NotTwoPlayer(GridStoreError):
    """An operation that needs exactly two players got something else."""


class DegenerateOpponentStrategy(GridStoreError):
    """Opponent stores nothing, so the contested-region geometry collapses."""


class MissingProspectParams(GridStoreError):
    """A framed evaluation was requested for a player without prospect parameters."""


class CycleDetected(GridStoreError):
    """Best-response iteration entered a period-2 cycle instead of converging."""

    def __init__(self, first, second, iterations: int = 0):
        self.first = first
        self.second = second
        self.iterations = iterations
        super().__init__(
            f"best-response iteration cycles between {first} and {second}"
        )


class NoCoveragePrice(GridStoreError):
    """No emergency price up to the search ceiling covers the critical load."""

    def __init__(self, lam: float, price_hi: float):
        self.lam = lam
        self.price_hi = price_hi
        super().__init__(
            f"total stored never reaches the critical load for loss aversion "
            f"{lam:g} with emergency price up to {price_hi:g}"
        )
