"""Exception hierarchy shared across the engine."""


class HasodError(Exception):
    """Base class for all domain errors raised by this package."""


class NonFiniteError(HasodError):
    """An input array or response contained NaN or infinity."""


class DegenerateError(HasodError):
    """Too little data for the requested computation."""


class SolveFailure(HasodError):
    """A regularized linear solve was numerically singular."""


class DesignError(HasodError):
    """Illegal parameters for a design constructor."""


class FitFailure(HasodError):
    """Every restart of a surrogate fit failed."""


class MeanQueryOnVarianceOnlyModel(HasodError):
    """Posterior mean requested from a variance-only conditioned model."""


class SessionError(HasodError):
    """Live-session protocol violation (wrong phase, bad row id, ...)."""


class UnknownRowId(SessionError):
    pass


class DuplicateResponse(SessionError):
    pass


class SessionComplete(SessionError):
    pass


class NotComplete(SessionError):
    pass
