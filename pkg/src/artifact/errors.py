"""Exception hierarchy shared by all modules."""


class ArtifactError(Exception):
    """Base class. `exit_code` is used by the command-line front end."""

    exit_code = 3


class UsageError(ArtifactError):
    exit_code = 2


# lattice
class NotEven(UsageError):
    pass


class Singular(UsageError):
    pass


class NotSymmetric(UsageError):
    pass


class IndefiniteWithoutMajorant(UsageError):
    pass


class BoundTooLarge(ArtifactError):
    pass


class NotNegativeDefinite(UsageError):
    pass


class WrongDimension(UsageError):
    pass


# weilrep
class NotUnimodular(UsageError):
    pass


class DimensionMismatch(UsageError):
    pass


class WeightParityMismatch(UsageError):
    pass


class EvaluationFailure(ArtifactError):
    pass


# maass
class NonPositiveArgument(UsageError):
    pass


class NonPositiveX(UsageError):
    pass


class BadParameter(UsageError):
    pass


class UnboundedPrincipalPart(ArtifactError):
    pass


class RepMismatch(UsageError):
    pass


class DependentBasis(UsageError):
    pass


# series
class MissingMajorant(UsageError):
    pass


class CutoffInsufficient(ArtifactError):
    pass


class NotDefinite(UsageError):
    pass


class NotIsotropic(UsageError):
    pass


class NotPrimitive(UsageError):
    pass


class NonNegativeWeight(UsageError):
    pass


class BadIndex(UsageError):
    pass


class OutsideConvergence(UsageError):
    pass


# reglift
class WeightMismatch(UsageError):
    pass


class UndeclaredTail(ArtifactError):
    pass


class QuadratureFailure(ArtifactError):
    pass


class OnSingularLocus(ArtifactError):
    pass


class WeightNotNegative(UsageError):
    pass


# lsharp
class StencilFailure(ArtifactError):
    pass


class BadWeight(UsageError):
    pass


class MissingConstantProfile(UsageError):
    pass


class MissingBasisData(UsageError):
    pass


# cli
class UnknownSuite(UsageError):
    pass


class FixtureMissing(UsageError):
    pass


class IOFailure(ArtifactError):
    pass
