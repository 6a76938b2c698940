"""Exception hierarchy shared by all modules."""


class CompanaError(Exception):
    """Base class for library errors."""


class MalformedName(CompanaError, ValueError):
    """A name (real, function, instance) lacks data an operation needs."""


class DomainError(CompanaError, ValueError):
    """An argument is certifiably outside the domain of an operation."""


class PreconditionError(CompanaError):
    """A precondition could not be certified within the configured budget."""


class TrisectionStall(CompanaError):
    """Neither trisection test point admits a certified sign.

    ``point`` is a dyadic at which the function is within ``tolerance``
    of zero, so callers that only need an approximate zero may use it.
    """

    def __init__(self, point, tolerance, interval):
        super().__init__(
            f"trisection stalled at {interval}: both test points are within "
            f"{tolerance} of a zero"
        )
        self.point = point
        self.tolerance = tolerance
        self.interval = interval


class MalformedProgram(CompanaError, ValueError):
    """A counter-machine program failed validation."""
