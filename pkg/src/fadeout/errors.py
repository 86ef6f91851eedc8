"""Exception types shared across the package."""


class FadeoutError(Exception):
    """Base class for all package-specific errors."""


class NotApplicableError(FadeoutError):
    """A method was requested outside its regime of validity
    (e.g. a below-threshold formula with R0 >= 1)."""


class OutOfDomainError(FadeoutError, ValueError):
    """An argument lies outside the domain of the requested operation."""


class NumericalFailureError(FadeoutError):
    """A solver failed to reach its accuracy contract.

    The ``diagnostics`` dict carries whatever the solver knows about the
    failure (achieved residual, iteration counts, closest approach, ...).
    """

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class MeshFailureError(NumericalFailureError):
    """Triangulation is degenerate or does not tile the domain."""


class BvpFailureError(NumericalFailureError):
    """A shooting trajectory failed to connect the two equilibria."""
