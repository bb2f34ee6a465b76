"""Exception types raised across the package."""


class PlaneLerwError(Exception):
    """Base class for all package errors."""


# -- grid construction ------------------------------------------------------

class MeshTooCoarse(PlaneLerwError):
    pass


class TargetUnreachable(PlaneLerwError):
    pass


# -- Loewner evolution ------------------------------------------------------

class StepTooLarge(PlaneLerwError):
    pass


class TruncationTooLate(PlaneLerwError):
    pass


class NotNested(PlaneLerwError):
    pass


class NonIncreasingCapacity(PlaneLerwError):
    pass


class SelfIntersection(PlaneLerwError):
    pass


class TipDiverged(PlaneLerwError):
    pass


class DegenerateHull(PlaneLerwError):
    pass


# -- harmonic solvers -------------------------------------------------------

class SolverDiverged(PlaneLerwError):
    pass


class PoleOnBoundary(PlaneLerwError):
    pass


class EmptyArc(PlaneLerwError):
    pass


class TargetDisconnected(PlaneLerwError):
    pass


class Disconnected(PlaneLerwError):
    pass


class StripTooThin(PlaneLerwError):
    pass


class FieldInterpolationOutOfDomain(PlaneLerwError):
    pass


# -- continuous LERW --------------------------------------------------------

class PointInHull(PlaneLerwError):
    pass


class NonPositiveDy(PlaneLerwError):
    pass


class GuardNotSurrounding(PlaneLerwError):
    pass


class NoContraction(PlaneLerwError):
    pass


# -- harness ----------------------------------------------------------------

class InsufficientSamples(PlaneLerwError):
    pass
