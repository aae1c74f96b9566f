"""The billiard map inside a convex polyhedron with its face coding and beam membership."""
from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import EdgeHitError, PreconditionError, TraceToleranceError
from .geometry import (
    EPS_DIR,
    EPS_GEOM,
    FaceLocation,
    Polyhedron,
    point_in_face,
    reflect_affine,
)
from .isometry import AffineIsometry, compose

Word = tuple[str, ...]


@dataclass(frozen=True, eq=False)
class PhasePoint:
    """A point on face ``face`` with a unit ``direction`` pointing inside."""

    face: str
    point: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        p = np.array(self.point, dtype=float).reshape(3)
        d = np.array(self.direction, dtype=float).reshape(3)
        size = np.linalg.norm(d)
        if size == 0:
            raise PreconditionError("direction must be non-zero")
        d = d / size
        p.flags.writeable = False
        d.flags.writeable = False
        object.__setattr__(self, "point", p)
        object.__setattr__(self, "direction", d)

    def to_dict(self) -> dict:
        return {
            "face": self.face,
            "point": [float(x) for x in self.point],
            "direction": [float(x) for x in self.direction],
        }


def check_phase_point(poly: Polyhedron, pp: PhasePoint) -> None:
    """Raise PreconditionError unless ``pp`` is a valid billiard phase point."""
    fp = poly.plane(pp.face)
    if abs(fp.signed_distance(pp.point)) > EPS_GEOM:
        raise PreconditionError(f"point is not on face {pp.face!r}")
    loc = point_in_face(poly, pp.face, pp.point)
    if loc is not FaceLocation.INTERIOR:
        raise PreconditionError(f"point is {loc.value} to face {pp.face!r}, not interior")
    if pp.direction @ fp.normal >= -EPS_DIR:
        raise PreconditionError(f"direction does not point into the polyhedron from face {pp.face!r}")


# -- words ------------------------------------------------------------------
def parse_word(text: str | Sequence[str], alphabet: Iterable[str] | None = None) -> Word:
    """Split a word into face labels.

    Separators (comma, whitespace, ``-``) split explicitly. Otherwise the
    text is tokenized greedily against ``alphabet`` (longest label first),
    so ``"cc'"`` reads as ``("c", "c'")`` on the cube.
    """
    if not isinstance(text, str):
        return tuple(str(x) for x in text)
    text = text.strip()
    if re.search(r"[,\s\-]", text):
        return tuple(tok for tok in re.split(r"[,\s\-]+", text) if tok)
    if alphabet is None:
        return tuple(text)
    labels = sorted(set(alphabet), key=len, reverse=True)
    out, i = [], 0
    while i < len(text):
        for lab in labels:
            if text.startswith(lab, i):
                out.append(lab)
                i += len(lab)
                break
        else:
            raise PreconditionError(f"cannot read {text[i:]!r} as face labels {sorted(labels)}")
    return tuple(out)


def validate_word(poly: Polyhedron, word: str | Sequence[str]) -> Word:
    """Check labels and the no-immediate-repeat rule; strings are parsed first."""
    if isinstance(word, str):
        word = parse_word(word, poly.labels)
    word = tuple(word)
    if not word:
        raise PreconditionError("word must be non-empty")
    known = set(poly.labels)
    for lab in word:
        if lab not in known:
            raise PreconditionError(f"unknown face label {lab!r} in word")
    for x, y in zip(word, word[1:]):
        if x == y:
            raise PreconditionError(f"word repeats face {x!r} consecutively")
    return word


def format_word(word: Sequence[str]) -> str:
    if all(len(x) == 1 for x in word):
        return "".join(word)
    return ",".join(word)


# -- billiard map -----------------------------------------------------------
def step(poly: Polyhedron, pp: PhasePoint, *, checked: bool = False) -> PhasePoint:
    """One bounce: follow the ray to the next face and reflect.

    Raises:
        EdgeHitError: if the ray reaches the boundary of a face.
        TraceToleranceError: if no face is hit (numerical breakdown).
    """
    if not checked:
        check_phase_point(poly, pp)
    p, theta = pp.point, pp.direction
    best_t, best_label = np.inf, None
    for label in poly.labels:
        if label == pp.face:
            continue
        fp = poly.plane(label)
        rate = fp.normal @ theta
        if rate <= 1e-15:
            continue
        t = (fp.offset - fp.normal @ p) / rate
        if EPS_GEOM < t < best_t:
            best_t, best_label = t, label
    if best_label is None:
        raise TraceToleranceError(f"ray from face {pp.face!r} meets no face")
    fp = poly.plane(best_label)
    q = fp.project(p + best_t * theta)
    loc = point_in_face(poly, best_label, q)
    if loc is FaceLocation.BOUNDARY:
        raise EdgeHitError(f"ray hits the boundary of face {best_label!r}", best_label, q)
    if loc is FaceLocation.OUTSIDE:
        raise TraceToleranceError(f"nearest hit on face {best_label!r} lies outside the face")
    reflected = theta - 2.0 * (theta @ fp.normal) * fp.normal
    return PhasePoint(best_label, q, reflected)


class TraceStatus(str, Enum):
    COMPLETED = "completed"
    HIT_EDGE = "hit_edge"
    TOLERANCE_FAILURE = "tolerance_failure"


@dataclass(frozen=True, eq=False)
class TraceResult:
    """``visited[0]`` is the start; ``coding[i]`` is the face of ``visited[i + 1]``."""

    visited: tuple[PhasePoint, ...]
    coding: Word
    status: TraceStatus
    message: str = ""
    edge_point: np.ndarray | None = None

    @property
    def completed(self) -> bool:
        return self.status is TraceStatus.COMPLETED

    @property
    def full_coding(self) -> Word:
        return (self.visited[0].face,) + self.coding

    @property
    def end(self) -> PhasePoint:
        return self.visited[-1]

    def records(self) -> list[dict]:
        return [{"step": i, **pp.to_dict()} for i, pp in enumerate(self.visited)]

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r) + "\n" for r in self.records())

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["step", "face", "x", "y", "z", "dx", "dy", "dz"])
        for r in self.records():
            writer.writerow([r["step"], r["face"], *map(repr, r["point"]), *map(repr, r["direction"])])
        return buf.getvalue()


def trace(poly: Polyhedron, pp: PhasePoint, n_steps: int) -> TraceResult:
    """Iterate :func:`step`; stop early (keeping partial data) on an edge hit."""
    if n_steps < 1:
        raise PreconditionError("n_steps must be >= 1")
    check_phase_point(poly, pp)
    visited = [pp]
    status, message, edge_point = TraceStatus.COMPLETED, "", None
    for _ in range(n_steps):
        try:
            visited.append(step(poly, visited[-1], checked=True))
        except EdgeHitError as exc:
            status, message, edge_point = TraceStatus.HIT_EDGE, str(exc), exc.point
            break
        except TraceToleranceError as exc:
            status, message = TraceStatus.TOLERANCE_FAILURE, str(exc)
            break
    coding = tuple(v.face for v in visited[1:])
    return TraceResult(tuple(visited), coding, status, message, edge_point)


class Admissibility(NamedTuple):
    """Beam membership. ``undefined`` marks an edge hit before any mismatch."""

    admissible: bool
    undefined: bool
    trace: TraceResult

    def __bool__(self) -> bool:
        return self.admissible


def is_admissible(poly: Polyhedron, word: Sequence[str], m, theta) -> Admissibility:
    """Whether ``(m, theta)`` on face ``word[0]`` lies in the beam of ``word``.

    Raises:
        PreconditionError: if ``m`` is not interior to ``word[0]`` or ``theta``
            does not point inside.
    """
    word = validate_word(poly, word)
    pp = PhasePoint(word[0], m, theta)
    check_phase_point(poly, pp)
    if len(word) == 1:
        return Admissibility(True, False, TraceResult((pp,), (), TraceStatus.COMPLETED))
    tr = trace(poly, pp, len(word) - 1)
    expected = word[1:]
    prefix_ok = tr.coding == expected[: len(tr.coding)]
    if tr.completed:
        return Admissibility(prefix_ok, False, tr)
    return Admissibility(False, prefix_ok and tr.status is TraceStatus.HIT_EDGE, tr)


def unfolding_isometry(poly: Polyhedron, hits: Sequence[str]) -> AffineIsometry:
    """Reflections in the faces ``hits`` applied in hit order (first hit first)."""
    s = AffineIsometry.identity()
    for label in hits:
        s = compose(reflect_affine(poly.plane(label)), s)
    return s


def word_isometry(poly: Polyhedron, word: Sequence[str]) -> tuple[np.ndarray, AffineIsometry]:
    """``S_v = S_{v0} S_{v(n-1)} ... S_{v1}`` and the matching affine product ``s_v``.

    A trajectory leaving face ``v0`` hits ``v1, ..., v(n-1)`` and then ``v0``
    again, so the reflections are applied in that order.
    """
    word = validate_word(poly, word)
    s = unfolding_isometry(poly, word[1:] + word[:1])
    return s.linear, s
