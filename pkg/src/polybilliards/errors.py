"""Exception hierarchy shared by all modules."""


class PolyBilliardsError(Exception):
    """Base class for every error raised by this package."""


class GeometryError(PolyBilliardsError, ValueError):
    """Invalid polyhedron, or a point that does not fit the face it is given with."""


class PreconditionError(PolyBilliardsError, ValueError):
    """An operation was called outside its domain."""


class IsometryError(PolyBilliardsError, ValueError):
    """An isometry does not have the structure an operation needs."""


class AxisParallelError(IsometryError):
    """The fixed axis of a screw motion is parallel to the target plane."""


class NoTransversalSectionError(IsometryError):
    """A glide plane is parallel to the target plane."""


class RodriguesError(IsometryError):
    """Rodrigues composition is undefined for the given pair."""


class EdgeHitError(PolyBilliardsError):
    """The billiard ray meets the boundary of a face (edge or vertex).

    The billiard map is undefined there.
    """

    def __init__(self, message, face=None, point=None):
        super().__init__(message)
        self.face = face
        self.point = point


class TraceToleranceError(PolyBilliardsError):
    """Floating point drift made a billiard step inconsistent."""
