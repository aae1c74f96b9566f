"""Periodic billiard trajectories in convex polyhedra.

Face reflections compose into an affine isometry ``s_v`` for every coding word
``v``; its type decides whether a periodic orbit with that coding exists, where
it is, and whether it survives small changes of the polyhedron.
"""
from .billiard import PhasePoint, TraceResult, is_admissible, parse_word, step, trace, word_isometry
from .errors import (
    AxisParallelError,
    EdgeHitError,
    GeometryError,
    IsometryError,
    PolyBilliardsError,
    PreconditionError,
    TraceToleranceError,
)
from .fixtures import (
    acute_prism,
    get_fixture,
    obtuse_tetrahedron,
    regular_face_basis,
    regular_tetrahedron,
    right_prism,
    right_tetrahedron,
    unit_cube,
)
from .geometry import Polyhedron, dump_polyhedron, load_polyhedron, tetrahedron
from .isometry import AffineIsometry, AxisAngle, classify, fixed_eigendirection, rodrigues_compose
from .periodic import PeriodicKind, PeriodicResult, find_periodic, verify_periodic
from .returnmap import FaceBasis, beam_ellipse, first_return_map, fixed_point, invariant_conic
from .scan import scan_around_regular, scan_vertex_ranges
from .stability import perturb, prism_projection_check, stability_classify

__version__ = "0.1.0"

__all__ = [
    "AffineIsometry",
    "AxisAngle",
    "AxisParallelError",
    "EdgeHitError",
    "FaceBasis",
    "GeometryError",
    "IsometryError",
    "PeriodicKind",
    "PeriodicResult",
    "PhasePoint",
    "PolyBilliardsError",
    "Polyhedron",
    "PreconditionError",
    "TraceResult",
    "TraceToleranceError",
    "acute_prism",
    "beam_ellipse",
    "classify",
    "dump_polyhedron",
    "find_periodic",
    "first_return_map",
    "fixed_eigendirection",
    "fixed_point",
    "get_fixture",
    "invariant_conic",
    "is_admissible",
    "load_polyhedron",
    "obtuse_tetrahedron",
    "parse_word",
    "perturb",
    "prism_projection_check",
    "regular_face_basis",
    "regular_tetrahedron",
    "right_prism",
    "right_tetrahedron",
    "rodrigues_compose",
    "scan_around_regular",
    "scan_vertex_ranges",
    "stability_classify",
    "step",
    "tetrahedron",
    "trace",
    "unit_cube",
    "verify_periodic",
    "word_isometry",
]
