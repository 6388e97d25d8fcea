"""Exception hierarchy shared by all speclab modules."""


class SpeclabError(Exception):
    """Base class for every error raised by speclab."""


class InvalidParameter(SpeclabError, ValueError):
    pass


class ConvexityViolation(SpeclabError):
    pass


class NonPositiveSupport(SpeclabError):
    pass


class ConvergenceFailure(SpeclabError):
    pass


class DomainMismatch(SpeclabError):
    pass


class GridMismatch(SpeclabError):
    pass


class IllConditioned(SpeclabError):
    pass


class MissedEigenvalueSuspected(SpeclabError):
    pass


class NormalizationFailure(SpeclabError):
    pass


class NegativeDensity(SpeclabError):
    pass


class MeanNotZero(SpeclabError):
    pass


class DegenerateWeight(SpeclabError):
    pass


class MomentLevelError(SpeclabError):
    """A weight does not satisfy the moment level it claims."""


class SpectrumTooShort(SpeclabError):
    pass


class DegenerateFit(SpeclabError):
    pass


class ConfigError(SpeclabError):
    pass


class MissingArtifact(SpeclabError):
    pass
