"""Exception hierarchy shared across the package."""


class CamsyncError(Exception):
    """Base class for all camsync errors."""


class MissingFrame(CamsyncError):
    """A requested frame falls in a gap or outside the trajectory."""


class SingularModel(CamsyncError):
    """A model matrix that must be invertible is singular."""


class CheiralityAmbiguous(CamsyncError):
    """No pose candidate places a strict majority of points in front of both cameras."""


class ZeroVector(CamsyncError):
    """A direction vector that must be nonzero is zero."""


class DegenerateInput(CamsyncError):
    """A solver received a correspondence set it cannot handle."""


class NoRealSolution(CamsyncError):
    """Every solution of a solver was complex or infinite."""


class NotEnoughCorrespondences(CamsyncError):
    """Fewer valid correspondences than the minimal sample size."""


class AllDegenerate(CamsyncError):
    """Every sampled minimal set was rejected by the solver."""


class NeverImproved(CamsyncError):
    """The iterative loop never beat zero inliers.

    Carries the iteration log for diagnostics.
    """

    def __init__(self, message, log=None):
        super().__init__(message)
        self.log = log or []


class UnreachableSpeed(CamsyncError):
    """The viewing geometry cannot achieve the requested image speed."""


class TrajectoryFormatError(CamsyncError):
    """Malformed trajectory file; message carries a line number."""
