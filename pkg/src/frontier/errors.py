"""Exception hierarchy shared by all frontier modules."""


class FrontierError(Exception):
    """Base class for every error raised by the package."""


class ComputeError(FrontierError):
    """A computation could not produce a valid result."""


class ScenarioError(FrontierError):
    """A scenario file failed schema or range validation."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


# reaction_waves
class NotBistable(ComputeError):
    pass


class NoInteriorZero(ComputeError):
    pass


class MultipleInteriorZeros(ComputeError):
    pass


class ShootingFailed(ComputeError):
    pass


class NegativeRadicand(ComputeError):
    pass


class HypothesisViolated(ComputeError):
    def __init__(self, message, crossings=()):
        super().__init__(message)
        self.crossings = list(crossings)


class DegenerateNode(ComputeError):
    pass


class SingularIntegrand(ComputeError):
    pass


class RegionDegenerate(ComputeError):
    pass


class NonIntegrable(ComputeError):
    pass


class NegativeControl(ComputeError):
    pass


# wave_verify
class UnstableStep(ComputeError):
    pass


class BlowUp(ComputeError):
    pass


class NoFront(ComputeError):
    pass


# front_dynamics
class DegenerateTriple(ComputeError):
    pass


class OpenCurveWithoutDomain(ComputeError):
    pass


class MisalignedField(ComputeError):
    pass


class SelfIntersectionAfterStep(ComputeError):
    pass


class CollapsedCurve(ComputeError):
    pass


# eradication
class InfeasibleBudget(ComputeError):
    pass


class RadiusBisectionFailed(ComputeError):
    pass


class ConvexityLost(ComputeError):
    pass


# constrained
class UnsupportedShape(ComputeError):
    def __init__(self, message, upper_bound=None):
        super().__init__(message)
        self.upper_bound = upper_bound


class NotIsosceles(ComputeError):
    pass


class NotNested(ComputeError):
    pass


# optimality
class NonDifferentiableEffort(ComputeError):
    pass


class MissingMarkers(ComputeError):
    pass


class NoActiveMarkers(ComputeError):
    pass
