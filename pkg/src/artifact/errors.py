"""Exception types raised across the toolkit."""


class ArtifactError(Exception):
    """Base class for every error raised by this package."""


class ZeroWidthDimension(ArtifactError, ValueError):
    pass


class NonPositiveScale(ArtifactError, ValueError):
    pass


class NotPositiveDefinite(ArtifactError):
    """Correlation matrix could not be factorized even after nugget escalation."""


class SingularBlock(ArtifactError):
    pass


class RankDeficient(ArtifactError):
    pass


class OutOfDomain(ArtifactError, ValueError):
    pass


class NotMultifidelity(ArtifactError, ValueError):
    pass


class DegenerateReference(ArtifactError, ValueError):
    pass


class ClassAbsent(ArtifactError, ValueError):
    pass


class ClusteringDetected(ArtifactError):
    pass


class AllCandidatesRejected(ArtifactError):
    pass


class InfeasibleConstraint(ArtifactError):
    pass


class EmptyCell(ArtifactError):
    pass


class AllRanksExhausted(ArtifactError):
    pass


class DegenerateCommittee(ArtifactError):
    pass


class StepSizeUnderflow(ArtifactError):
    pass


class NonFiniteTrajectory(ArtifactError):
    pass


class ConfigError(ArtifactError, ValueError):
    pass
