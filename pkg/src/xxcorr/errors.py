"""Exception types shared across the package."""

from __future__ import annotations


class DomainError(ValueError):
    """An argument lies outside the domain of the requested quantity."""


class NumericalFailure(RuntimeError):
    """A numerical step failed; ``context`` names the failing point."""

    def __init__(self, message: str, **context):
        self.context = context
        if context:
            details = ", ".join(f"{k}={v!r}" for k, v in context.items())
            message = f"{message} ({details})"
        super().__init__(message)


class SingularDeterminant(NumericalFailure):
    """det(1 + V) vanishes on the grid, so sigma and the b potentials diverge."""
