"""Existence and location of periodic billiard orbits for a given coding word.

For a word ``v`` the composed face reflection ``s_v`` decides everything:

* even length, ``S_v != I``: ``s_v`` is a screw motion; the only candidate base
  point is where its axis meets face ``v0``, moving along the axis;
* even length, ``S_v = I``: ``s_v`` is a translation; every base point whose
  orbit along the translation direction keeps the coding is periodic (open set);
* odd length: ``S_v`` must be a reflection; candidates fill the line where the
  glide plane meets face ``v0`` and move along the glide vector (segment).

A candidate is accepted only if its trajectory realizes the word ``v v0``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np

from .billiard import (
    PhasePoint,
    Word,
    format_word,
    is_admissible,
    trace,
    validate_word,
    word_isometry,
)
from .errors import AxisParallelError, NoTransversalSectionError, PreconditionError
from .geometry import (
    EPS_DIR,
    FaceLocation,
    Polyhedron,
    clip_line_to_face,
    point_in_face,
    reflect_linear,
)
from .isometry import (
    IsometryTag,
    axis_point_on_face,
    classify,
    fixed_eigendirection,
    glide_plane_section,
)

CLOSURE_TOL = 1e-8
GRID_RESOLUTION = 64


class PeriodicKind(str, Enum):
    UNIQUE_POINT = "unique_point"
    SEGMENT = "segment"
    OPEN_SET = "open_set"
    NONEXISTENT = "nonexistent"
    UNDEFINED_EDGE = "undefined_edge"


@dataclass(frozen=True, eq=False)
class PeriodicResult:
    """Outcome of :func:`find_periodic`.

    ``point``/``direction`` is the witness phase point for every existing kind
    (the unique point, a sample of the open set, the midpoint of the segment).
    """

    kind: PeriodicKind
    word: Word
    point: np.ndarray | None = None
    direction: np.ndarray | None = None
    segment: tuple[np.ndarray, np.ndarray] | None = None
    translation: np.ndarray | None = None
    diagnostic: str = ""
    details: dict = field(default_factory=dict)

    @property
    def face(self) -> str:
        return self.word[0]

    @property
    def exists(self) -> bool:
        return self.kind in (PeriodicKind.UNIQUE_POINT, PeriodicKind.SEGMENT, PeriodicKind.OPEN_SET)

    @property
    def phase_point(self) -> PhasePoint:
        if self.point is None:
            raise PreconditionError(f"no witness for a {self.kind.value} result")
        return PhasePoint(self.face, self.point, self.direction)

    def to_dict(self) -> dict:
        def lst(v):
            return None if v is None else [float(x) + 0.0 for x in v]

        return {
            "kind": self.kind.value,
            "word": format_word(self.word),
            "face": self.face,
            "point": lst(self.point),
            "direction": lst(self.direction),
            "segment": None if self.segment is None else [lst(p) for p in self.segment],
            "translation": lst(self.translation),
            "diagnostic": self.diagnostic,
            "details": _plain(self.details),
        }


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, Enum):
        return obj.value
    return obj


class Verification(NamedTuple):
    ok: bool
    closure_error: float
    direction_error: float
    undefined: bool
    coding: Word


def verify_periodic(poly: Polyhedron, pp: PhasePoint, word: Sequence[str], tol: float = CLOSURE_TOL) -> Verification:
    """Trace ``len(word)`` bounces and check coding and return to ``pp``."""
    word = validate_word(poly, word)
    if pp.face != word[0]:
        raise PreconditionError(f"phase point is on face {pp.face!r}, word starts with {word[0]!r}")
    tr = trace(poly, pp, len(word))
    expected = word[1:] + word[:1]
    if not tr.completed:
        return Verification(False, np.inf, np.inf, tr.coding == expected[: len(tr.coding)], tr.coding)
    close = float(np.linalg.norm(tr.end.point - pp.point))
    turn = float(np.linalg.norm(tr.end.direction - pp.direction))
    ok = tr.coding == expected and close <= tol and turn <= tol
    return Verification(ok, close, turn, False, tr.coding)


def reverse_word(word: Sequence[str]) -> Word:
    """Coding of the time-reversed orbit, started on the same face."""
    word = tuple(word)
    return word[:1] + word[:0:-1]


def reversed_direction(poly: Polyhedron, pp: PhasePoint) -> np.ndarray:
    """Start direction of the reversed orbit through ``pp``: minus the incoming direction."""
    return -reflect_linear(poly.plane(pp.face).normal) @ pp.direction


# -- the algorithm ------------------------------------------------------------
def find_periodic(poly: Polyhedron, word: Sequence[str], grid: int = GRID_RESOLUTION) -> PeriodicResult:
    """Decide whether ``word`` codes a periodic orbit of period ``len(word)``."""
    word = validate_word(poly, word)
    if len(word) < 2:
        raise PreconditionError("periodic words need length >= 2")
    if word[-1] == word[0]:
        raise PreconditionError("word is not cyclically reduced (last letter equals first)")
    L, s = word_isometry(poly, word)
    cls = classify(s)
    details = {"isometry": s.to_dict(), "isometry_class": cls.tag.value}
    if len(word) % 2 == 0:
        if cls.tag in (IsometryTag.IDENTITY, IsometryTag.TRANSLATION):
            return _translation_case(poly, word, s, cls, details, grid)
        return _screw_case(poly, word, s, details)
    return _glide_case(poly, word, s, details)


def _nonexistent(word, diagnostic, details, kind=PeriodicKind.NONEXISTENT):
    return PeriodicResult(kind, word, diagnostic=diagnostic, details=details)


def _orient_inward(theta, normal):
    """Unit, inward version of ``theta``; None if tangential to the face."""
    theta = theta / np.linalg.norm(theta)
    rate = theta @ normal
    if abs(rate) < EPS_DIR:
        return None
    return -theta if rate > 0 else theta


def _nearest_vertex(poly, point, direction):
    rel = poly.vertices - point
    dist = np.linalg.norm(np.cross(rel, direction), axis=1)
    i = int(np.argmin(dist))
    return poly.vertex_name(i), float(dist[i])


def _screw_case(poly, word, s, details):
    fp = poly.plane(word[0])
    fixed = fixed_eigendirection(s.linear)
    if fixed.dimension != 1:
        details["eigenspace_dimension"] = fixed.dimension
        return _nonexistent(word, "eigenspace dimension mismatch", details)
    details["axis_direction"] = fixed.direction
    try:
        m = axis_point_on_face(s, fp)
    except AxisParallelError:
        return _nonexistent(word, "axis parallel to face", details)
    details["axis_point"] = m
    loc = point_in_face(poly, word[0], m)
    details["axis_point_location"] = loc.value
    if loc is FaceLocation.OUTSIDE:
        return _nonexistent(word, "axis point outside face", details)
    if loc is FaceLocation.BOUNDARY:
        return _nonexistent(word, "axis point on face boundary", details, PeriodicKind.UNDEFINED_EDGE)
    shift = m - s(m)
    if np.linalg.norm(shift) < 1e-12:
        return _nonexistent(word, "unfolding has a fixed point (rotation without screw part)", details)
    theta = _orient_inward(shift, fp.normal)
    if theta is None:
        return _nonexistent(word, "tangential direction", details)
    details["nearest_vertex"], details["nearest_vertex_distance"] = _nearest_vertex(poly, m, theta)
    return _accept(poly, word, m, theta, details, PeriodicKind.UNIQUE_POINT)


def _accept(poly, word, m, theta, details, kind, **extra):
    adm = is_admissible(poly, word + word[:1], m, theta)
    if not adm:
        details["realized_coding"] = format_word(adm.trace.full_coding)
        if adm.undefined:
            details["edge_point"] = adm.trace.edge_point
            return _nonexistent(word, "trajectory hits an edge or vertex", details)
        return _nonexistent(word, "not admissible", details)
    check = verify_periodic(poly, PhasePoint(word[0], m, theta), word)
    details["closure_error"] = check.closure_error
    if not check.ok:
        return _nonexistent(word, "closure failed", details)
    return PeriodicResult(kind, word, point=m, direction=theta, details=details, **extra)


def face_grid(poly: Polyhedron, label: str, resolution: int) -> np.ndarray:
    """Face centroid plus an interior barycentric grid on a fan triangulation,
    ordered nearest-centroid first."""
    pts = poly.face_points(label)
    ij = [(i, j) for i in range(1, resolution) for j in range(1, resolution - i)]
    bary = np.array([(i, j, resolution - i - j) for i, j in ij], dtype=float) / resolution
    chunks = [bary @ np.array([pts[0], pts[k], pts[k + 1]]) for k in range(1, len(pts) - 1)]
    center = pts.mean(axis=0)
    grid = np.vstack([center[None, :]] + chunks)
    order = np.argsort(np.linalg.norm(grid - center, axis=1), kind="stable")
    return grid[order]


def _translation_case(poly, word, s, cls, details, grid):
    fp = poly.plane(word[0])
    if cls.tag is IsometryTag.IDENTITY:
        return _nonexistent(word, "unfolding is the identity", details)
    shift = -s.translation  # m - s_v(m), the same for every m
    theta = _orient_inward(shift, fp.normal)
    if theta is None:
        return _nonexistent(word, "tangential direction", details)
    for resolution in (grid, 2 * grid):
        for m in face_grid(poly, word[0], resolution):
            if point_in_face(poly, word[0], m) is not FaceLocation.INTERIOR:
                continue
            if is_admissible(poly, word + word[:1], m, theta):
                details["grid_resolution"] = resolution
                return _accept(poly, word, m, theta, details, PeriodicKind.OPEN_SET, translation=shift)
    details["grid_resolution"] = 2 * grid
    return _nonexistent(word, "no admissible grid point", details)


def _glide_case(poly, word, s, details, samples: int = 64, bisections: int = 50):
    fp = poly.plane(word[0])
    fixed = fixed_eigendirection(s.linear)
    if s.det > 0 or fixed.dimension != 2:
        details["eigenspace_dimension"] = fixed.dimension
        return _nonexistent(word, "linear part not a reflection", details)
    if classify(s).tag is IsometryTag.REFLECTION:
        return _nonexistent(word, "unfolding is a pure reflection", details)
    try:
        section = glide_plane_section(s, fp)
    except NoTransversalSectionError:
        return _nonexistent(word, "glide plane parallel to face", details)
    details["glide"] = section.glide
    theta = _orient_inward(-section.glide, fp.normal)
    if theta is None:
        return _nonexistent(word, "tangential direction", details)
    span = clip_line_to_face(poly, word[0], section.point, section.direction)
    if span is None:
        return _nonexistent(word, "glide plane misses face", details)
    lo, hi = span
    full = word + word[:1]

    def at(t):
        return section.point + t * section.direction

    def admissible(t):
        p = at(t)
        if point_in_face(poly, word[0], p) is not FaceLocation.INTERIOR:
            return False
        return bool(is_admissible(poly, full, p, theta))

    ts = lo + (hi - lo) * np.arange(1, samples + 1) / (samples + 1)
    flags = [admissible(t) for t in ts]
    best, run_start = None, None
    for k, ok in enumerate(flags + [False]):
        if ok and run_start is None:
            run_start = k
        if not ok and run_start is not None:
            if best is None or k - run_start > best[1] - best[0]:
                best = (run_start, k)
            run_start = None
    if best is None:
        return _nonexistent(word, "no admissible point on the glide section", details)
    first, stop = best

    def refine(inside, outside):
        for _ in range(bisections):
            mid = 0.5 * (inside + outside)
            if admissible(mid):
                inside = mid
            else:
                outside = mid
        return inside

    a = refine(ts[first], ts[first - 1] if first > 0 else lo)
    b = refine(ts[stop - 1], ts[stop] if stop < samples else hi)
    mid = at(0.5 * (a + b))
    details["section_span"] = [lo, hi]
    return _accept(poly, word, mid, theta, details, PeriodicKind.SEGMENT, segment=(at(a), at(b)))


def segment_samples(result: PeriodicResult, count: int) -> list[PhasePoint]:
    """``count`` phase points evenly spread over the interior of a segment result."""
    if result.kind is not PeriodicKind.SEGMENT:
        raise PreconditionError("not a segment result")
    p, q = result.segment
    return [
        PhasePoint(result.face, p + (q - p) * (k + 1) / (count + 1), result.direction)
        for k in range(count)
    ]


def tetrahedron_words(poly: Polyhedron) -> list[Word]:
    labels = sorted(poly.labels)
    if len(labels) != 4:
        raise PreconditionError("not a tetrahedron")
    first, rest = labels[0], labels[1:]
    return [(first,) + perm for perm in itertools.permutations(rest)]


def enumerate_length4_orbits(poly: Polyhedron) -> list[tuple[Word, PeriodicResult]]:
    """All six words of length four starting with the first label."""
    if len(poly.faces) != 4 or any(len(f.vertices) != 3 for f in poly.faces):
        raise PreconditionError("enumerate_length4_orbits needs a tetrahedron")
    return [(w, find_periodic(poly, w)) for w in tetrahedron_words(poly)]


class ReversalPair(NamedTuple):
    """Two orbits related by direction reversal, with how well they match."""

    word: Word
    reversed: Word
    point_gap: float
    direction_gap: float


def reversal_pairs(poly: Polyhedron, results: Sequence[tuple[Word, PeriodicResult]]) -> list[ReversalPair]:
    """Pair each existing orbit with the orbit of its reversed word.

    ``point_gap`` compares base points; ``direction_gap`` compares the reversed
    orbit's start direction with :func:`reversed_direction` of the first.
    """
    found = {w: r for w, r in results if r.exists}
    pairs = []
    for w, res in found.items():
        rw = reverse_word(w)
        if not w < rw or rw not in found:
            continue
        other = found[rw]
        expected = reversed_direction(poly, res.phase_point)
        pairs.append(
            ReversalPair(
                w,
                rw,
                float(np.linalg.norm(other.point - res.point)),
                float(np.linalg.norm(other.direction - expected)),
            )
        )
    return pairs
