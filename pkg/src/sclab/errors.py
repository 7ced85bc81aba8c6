"""Exception hierarchy shared by all sclab modules."""


class ScLabError(Exception):
    """Base class for every error raised by sclab."""


class LevelError(ScLabError, IndexError):
    """A level index is outside the range a scale or point supports."""


class ShapeError(ScLabError, ValueError):
    """Array shapes or truncation sizes do not fit together."""


class PreconditionError(ScLabError, ValueError):
    pass


class DegenerateBasisError(ScLabError, ValueError):
    pass


class AmbiguousRankError(ScLabError):
    """Singular values straddle the rank threshold.

    ``gap`` holds the offending relative singular values so callers can
    report how close the decision was.
    """

    def __init__(self, message, gap=None):
        super().__init__(message)
        self.gap = gap


class EvaluationError(ScLabError):
    pass


class FDInstabilityError(ScLabError):
    def __init__(self, message, step_table=None):
        super().__init__(message)
        self.step_table = step_table or []


class ConfigurationError(ScLabError, ValueError):
    pass


class DomainError(ScLabError, ValueError):
    pass


class RetractionError(ScLabError):
    def __init__(self, message, worst_sample=None, residual=None):
        super().__init__(message)
        self.worst_sample = worst_sample
        self.residual = residual


class ContainmentError(ScLabError):
    pass


class QuadrantError(ScLabError, ValueError):
    pass


class ChartError(ScLabError):
    def __init__(self, message, label=None):
        super().__init__(message)
        self.label = label


class DiffeoError(ScLabError):
    pass
