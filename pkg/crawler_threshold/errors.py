from typing import Optional, Sequence


class CrawlerThresholdError(ValueError):
    """Base class of every model, solver, policy and trace error."""


class ViolationsError(CrawlerThresholdError):
    """An error carrying the list of individual invariant violations."""

    def __init__(self, msg: str, violations: Optional[Sequence[str]] = None):
        super().__init__(msg)
        self.violations = list(violations) if violations else [msg]


class DimensionError(CrawlerThresholdError):
    pass


class SingularMatrixError(CrawlerThresholdError):
    def __init__(self, msg: str, condition: float = float("inf")):
        super().__init__(msg)
        self.condition = condition


class DegenerateChainError(CrawlerThresholdError):
    pass


class ModelError(CrawlerThresholdError):
    pass


class PhaseTypeError(ViolationsError):
    pass


class ArrivalProcessError(ViolationsError):
    pass


class IrreparableModelError(ArrivalProcessError):
    pass


class PolicyError(CrawlerThresholdError):
    pass


class StateSpaceError(CrawlerThresholdError):
    pass


class WrongSolverError(CrawlerThresholdError):
    pass


class StationarySolutionError(CrawlerThresholdError):
    pass


class IncompleteReportError(CrawlerThresholdError):
    pass


class TraceError(CrawlerThresholdError):
    pass


class ModelFileError(ViolationsError):
    pass
