"""Exception types shared across the package."""


class EcomannError(Exception):
    """Base class for all domain errors."""


class ParameterError(EcomannError, ValueError):
    """An argument violates a documented precondition."""


class RankDeficiencyError(EcomannError):
    """A local neighborhood is degenerate (zero covariance)."""


class ParseError(EcomannError, ValueError):
    """A dataset or model file is malformed."""


class GenerationError(EcomannError):
    """A dataset generator failed (e.g. projection almost never converges)."""


class TrainingError(EcomannError):
    """Training diverged; carries the epoch where it happened."""

    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch


class ProjectionError(EcomannError):
    """Projection produced a non-finite iterate."""


class PlanningError(EcomannError):
    """A planning stage failed; carries the 1-based stage index."""

    def __init__(self, message, stage=None):
        super().__init__(message)
        self.stage = stage
