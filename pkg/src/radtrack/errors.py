"""Exception hierarchy.

Every error raised on purpose by the toolkit derives from :class:`RadtrackError`
so callers (the CLI, the Monte-Carlo runner) can catch the whole family and
report the class name as a machine-readable outcome.
"""


class RadtrackError(Exception):
    """Base class for all toolkit errors."""


class NumericalError(RadtrackError):
    """A numerical routine could not produce a trustworthy answer."""


class RankDeficient(NumericalError):
    pass


class NoSignChange(NumericalError):
    pass


class MaxDepthExceeded(NumericalError):
    pass


class DegenerateGeometry(RadtrackError):
    """The sensor/trajectory configuration is one of the measure-zero bad cases."""


class CoincidentSensors(DegenerateGeometry):
    pass


class GammaNearZero(DegenerateGeometry):
    """Data are consistent with a straight line; use the linear estimator."""


class RepeatedTimes(DegenerateGeometry):
    pass


class DegenerateDistance(RadtrackError):
    pass


class DegenerateD(RadtrackError):
    pass


class DomainError(RadtrackError):
    pass


class NonUnimodal(RadtrackError):
    pass


class InvalidShape(RadtrackError):
    pass


class MajorizerOverflow(RadtrackError):
    pass


class MissingTransitions(RadtrackError):
    pass


class InsufficientTriggers(RadtrackError):
    pass


class RejectionBudgetExceeded(RadtrackError):
    pass
