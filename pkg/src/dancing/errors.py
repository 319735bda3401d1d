"""Exception types raised by the dancing package."""


class DanceError(ValueError):
    """Base class for all domain errors in this package."""


class ProportionalInputs(DanceError):
    pass


class ZeroPolar(DanceError):
    pass


class DegenerateConfiguration(DanceError):
    pass


class ProportionalConics(DanceError):
    pass


class SplitFailure(DanceError):
    pass


class SingularMatrix(DanceError):
    pass


class IncidentPair(DanceError):
    pass


class IncidentOutput(DanceError):
    pass


class IncidentPoint(DanceError):
    pass


class OriginPoint(DanceError):
    pass


class DegenerateMetric(DanceError):
    pass


class InconsistentRecurrence(DanceError):
    pass


class StepBlowUp(DanceError):
    pass


class NoRealEllipse(DanceError):
    pass


class NoBranch(DanceError):
    pass


class UnknownSuite(DanceError):
    pass


class InvalidParams(DanceError):
    pass
