"""Exception hierarchy shared by all wlab modules."""


class WlabError(Exception):
    """Base class for every error raised by this package."""


class ConstantMap(WlabError):
    pass


class SingularMatrix(WlabError):
    pass


class OutsideDomain(WlabError):
    pass


class PoleEncountered(WlabError):
    pass


class StencilOutsideDomain(WlabError):
    pass


class WindowEmpty(WlabError):
    pass


class EtaOutOfRange(WlabError):
    pass


class CriticalPoint(WlabError):
    pass


class DegenerateMetric(WlabError):
    pass


class PathExitsDomain(WlabError):
    pass


class PoleOnPath(WlabError):
    pass


class DisconnectedGrid(WlabError):
    pass


class DuplicatePunctures(WlabError):
    pass


class PeriodViolation(WlabError):
    """A loop integral has a real part above tolerance."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals or []


class IntegrationThroughPole(WlabError):
    pass


class IdenticallyUnitModulus(WlabError):
    pass


class ExactnessViolation(PeriodViolation):
    pass


class OdeStepFailure(WlabError):
    pass


class NonUnimodularDrift(WlabError):
    pass


class NotSimplyConnected(WlabError):
    pass


class IoFailure(WlabError):
    pass


class ParseError(WlabError):
    pass
