"""Convex polyhedra, face planes, and face reflections.

A :class:`Polyhedron` is a list of vertices plus labelled faces given as
vertex-index cycles. The labels form the coding alphabet. Face normals are
oriented outward using the centroid, so vertex cycles may be wound either way.
"""
from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import GeometryError
from .isometry import AffineIsometry


def _env_eps() -> float:
    raw = os.environ.get("POLYBILLIARDS_EPS")
    if raw is None:
        return 1e-9
    try:
        value = float(raw)
    except ValueError as exc:
        raise GeometryError(f"POLYBILLIARDS_EPS is not a number: {raw!r}") from exc
    if not value > 0:
        raise GeometryError(f"POLYBILLIARDS_EPS must be positive, got {value}")
    return value


#: Planarity / containment tolerance, in model length units.
EPS_GEOM = _env_eps()
#: Minimum |theta . n| for a direction to count as transversal to a face.
EPS_DIR = 1e-9


class FaceLocation(str, Enum):
    INTERIOR = "interior"
    BOUNDARY = "boundary"
    OUTSIDE = "outside"


@dataclass(frozen=True, eq=False)
class FacePlane:
    """Plane ``{x : normal . x = offset}`` with unit outward ``normal``."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        n = np.array(self.normal, dtype=float).reshape(3)
        norm = np.linalg.norm(n)
        if not np.isclose(norm, 1.0, atol=1e-12):
            raise GeometryError(f"face normal must be a unit vector, |n| = {norm}")
        n.flags.writeable = False
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "offset", float(self.offset))

    def signed_distance(self, p) -> float:
        return float(self.normal @ np.asarray(p, dtype=float) - self.offset)

    def project(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        return p - self.signed_distance(p) * self.normal


@dataclass(frozen=True)
class Face:
    label: str
    vertices: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class _FaceData:
    plane: FacePlane
    points: np.ndarray  # (k, 3) vertex coordinates in cycle order
    edge_starts: np.ndarray  # (k, 3)
    edge_normals: np.ndarray  # (k, 3), in-plane, unit, pointing into the face


@dataclass(frozen=True, eq=False)
class Polyhedron:
    """Convex polyhedron with labelled faces.

    Raises:
        GeometryError: if the faces are not planar convex polygons, the solid
            is not convex, labels repeat, or there are fewer than 4 faces.
    """

    vertices: np.ndarray
    faces: tuple[Face, ...]
    vertex_labels: tuple[str, ...] | None = None
    name: str | None = None
    _data: dict = field(default=None, init=False, repr=False)

    def __post_init__(self):
        verts = np.array(self.vertices, dtype=float)
        if verts.ndim != 2 or verts.shape[1] != 3 or len(verts) < 4:
            raise GeometryError("vertices must be a (k, 3) array with k >= 4")
        if not np.all(np.isfinite(verts)):
            raise GeometryError("vertices must be finite")
        verts.flags.writeable = False
        object.__setattr__(self, "vertices", verts)

        faces = tuple(
            f if isinstance(f, Face) else Face(str(f[0]), tuple(int(i) for i in f[1]))
            for f in self.faces
        )
        object.__setattr__(self, "faces", faces)
        if len(faces) < 4:
            raise GeometryError(f"a polyhedron needs at least 4 faces, got {len(faces)}")
        labels = [f.label for f in faces]
        if len(set(labels)) != len(labels):
            raise GeometryError(f"face labels must be unique: {labels}")
        if self.vertex_labels is not None:
            vl = tuple(str(v) for v in self.vertex_labels)
            if len(vl) != len(verts):
                raise GeometryError("vertex_labels length does not match vertices")
            object.__setattr__(self, "vertex_labels", vl)

        centroid = verts.mean(axis=0)
        data = {}
        for face in faces:
            data[face.label] = _build_face(face, verts, centroid)
        object.__setattr__(self, "_data", data)

        for label, fd in data.items():
            heights = verts @ fd.plane.normal - fd.plane.offset
            if heights.max() > EPS_GEOM:
                raise GeometryError(f"polyhedron is not convex: a vertex lies outside face {label!r}")

    # -- accessors ---------------------------------------------------------
    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(f.label for f in self.faces)

    @property
    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    def face(self, label: str) -> Face:
        for f in self.faces:
            if f.label == label:
                return f
        raise GeometryError(f"unknown face label {label!r}; faces are {list(self.labels)}")

    def plane(self, label: str) -> FacePlane:
        return self._face_data(label).plane

    def face_points(self, label: str) -> np.ndarray:
        return self._face_data(label).points

    def face_centroid(self, label: str) -> np.ndarray:
        return self._face_data(label).points.mean(axis=0)

    def vertex_name(self, index: int) -> str:
        if self.vertex_labels is not None:
            return self.vertex_labels[index]
        return str(index)

    def with_vertices(self, vertices) -> "Polyhedron":
        """Same labels and incidences, new coordinates."""
        return Polyhedron(vertices, self.faces, self.vertex_labels, self.name)

    def _face_data(self, label: str) -> _FaceData:
        try:
            return self._data[label]
        except KeyError:
            raise GeometryError(
                f"unknown face label {label!r}; faces are {list(self.labels)}"
            ) from None

    # -- serialization ------------------------------------------------------
    def to_dict(self) -> dict:
        out = {
            "vertices": [[float(x) for x in v] for v in self.vertices],
            "faces": [{"label": f.label, "vertices": list(f.vertices)} for f in self.faces],
        }
        if self.vertex_labels is not None:
            out["vertex_labels"] = list(self.vertex_labels)
        if self.name is not None:
            out["name"] = self.name
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Polyhedron":
        try:
            vertices = data["vertices"]
            faces = [(f["label"], f["vertices"]) for f in data["faces"]]
        except (KeyError, TypeError) as exc:
            raise GeometryError(f"malformed polyhedron description: missing {exc}") from exc
        return cls(vertices, faces, data.get("vertex_labels"), data.get("name"))


def _build_face(face: Face, verts: np.ndarray, centroid: np.ndarray) -> _FaceData:
    idx = face.vertices
    if len(idx) < 3 or len(set(idx)) != len(idx):
        raise GeometryError(f"face {face.label!r} needs at least 3 distinct vertices")
    if min(idx) < 0 or max(idx) >= len(verts):
        raise GeometryError(f"face {face.label!r} references a missing vertex")
    pts = verts[list(idx)]

    # Newell's method; robust for any planar polygon
    nxt = np.roll(pts, -1, axis=0)
    newell = np.array([
        np.sum((pts[:, 1] - nxt[:, 1]) * (pts[:, 2] + nxt[:, 2])),
        np.sum((pts[:, 2] - nxt[:, 2]) * (pts[:, 0] + nxt[:, 0])),
        np.sum((pts[:, 0] - nxt[:, 0]) * (pts[:, 1] + nxt[:, 1])),
    ])
    size = np.linalg.norm(newell)
    if size < EPS_GEOM**2:
        raise GeometryError(f"face {face.label!r} is degenerate (collinear vertices)")
    n = newell / size
    d = float(n @ pts.mean(axis=0))
    if np.abs(pts @ n - d).max() > EPS_GEOM:
        raise GeometryError(f"face {face.label!r} is not planar")
    side = n @ centroid - d
    if abs(side) <= EPS_GEOM:
        raise GeometryError(f"polyhedron is flat: centroid lies on face {face.label!r}")
    if side > 0:
        n, d = -n, -d

    center = pts.mean(axis=0)
    edges = nxt - pts
    inward = np.cross(n, edges)
    lengths = np.linalg.norm(inward, axis=1)
    if lengths.min() < EPS_GEOM:
        raise GeometryError(f"face {face.label!r} has a zero-length edge")
    inward /= lengths[:, None]
    flip = np.einsum("ij,ij->i", inward, center - pts) < 0
    inward[flip] *= -1
    # convex, simple polygon: every vertex on the inner side of every edge line
    margins =np.einsum("ik,ijk->ij", inward, pts[None, :, :] - pts[:, None, :])
    if margins.min() < -EPS_GEOM:
        raise GeometryError(f"face {face.label!r} is not a convex polygon")
    for arr in (pts, inward):
        arr.flags.writeable = False
    return _FaceData(FacePlane(n, d), pts, pts, inward)


# -- operations -------------------------------------------------------------
def face_plane(poly: Polyhedron, label: str) -> FacePlane:
    """Outward unit normal and offset of face ``label``."""
    return poly.plane(label)


def point_in_face(poly: Polyhedron, label: str, p, eps: float = EPS_GEOM) -> FaceLocation:
    """Classify a point of the face plane against the face polygon.

    Raises:
        GeometryError: if ``p`` is farther than ``eps`` from the face plane.
    """
    fd = poly._face_data(label)
    p = np.asarray(p, dtype=float)
    off = fd.plane.signed_distance(p)
    if abs(off) > eps:
        raise GeometryError(f"point is {off:.3e} off the plane of face {label!r}")
    margins = np.einsum("ij,ij->i", fd.edge_normals, p - fd.edge_starts)
    worst = margins.min()
    if worst < -eps:
        return FaceLocation.OUTSIDE
    if worst <= eps:
        return FaceLocation.BOUNDARY
    return FaceLocation.INTERIOR


def boundary_distance(poly: Polyhedron, label: str, p) -> float:
    """Signed in-plane distance from ``p`` to the face boundary (positive inside)."""
    fd = poly._face_data(label)
    return float(np.einsum("ij,ij->i", fd.edge_normals, np.asarray(p, float) - fd.edge_starts).min())


def clip_line_to_face(poly: Polyhedron, label: str, point, direction) -> tuple[float, float] | None:
    """Parameter interval ``[lo, hi]`` of ``point + s*direction`` inside the closed face.

    Returns None when the line misses the face (or only grazes it).
    """
    fd = poly._face_data(label)
    p = np.asarray(point, dtype=float)
    d = np.asarray(direction, dtype=float)
    base = np.einsum("ij,ij->i", fd.edge_normals, p - fd.edge_starts)
    rate = fd.edge_normals @ d
    lo, hi = -np.inf, np.inf
    for b, r in zip(base, rate):
        if abs(r) < 1e-15:
            if b < -EPS_GEOM:
                return None
            continue
        s = -b / r
        if r > 0:
            lo = max(lo, s)
        else:
            hi = min(hi, s)
    if not hi - lo > EPS_GEOM:
        return None
    return float(lo), float(hi)


def reflect_linear(n) -> np.ndarray:
    """Householder reflection ``I - 2 n n^T`` for a unit vector ``n``."""
    n = np.asarray(n, dtype=float).reshape(3)
    return np.eye(3) - 2.0 * np.outer(n, n)


def reflect_affine(fp: FacePlane) -> AffineIsometry:
    """Mirror reflection in the plane of ``fp``; fixes every point of the plane."""
    n = fp.normal
    return AffineIsometry(reflect_linear(n), 2.0 * fp.offset * n)


# -- file I/O ----------------------------------------------------------------
_FLOAT_TAG = "\x00f:"


def _tag_floats(obj):
    if isinstance(obj, dict):
        return {k: _tag_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_tag_floats(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not np.isfinite(x):
            raise ValueError("cannot serialize a non-finite float")
        return _FLOAT_TAG + format(x, ".17g")
    return obj


def canonical_dumps(obj) -> str:
    """JSON with sorted keys and every float written with 17 significant digits."""
    text = json.dumps(_tag_floats(obj), sort_keys=True, indent=2)
    return re.sub(r'"\\u0000f:([^"]*)"', r"\1", text) + "\n"


def load_polyhedron(source: str | Path | dict) -> Polyhedron:
    """Read a polyhedron from a JSON path, a JSON string, or a parsed dict."""
    if isinstance(source, dict):
        return Polyhedron.from_dict(source)
    text = Path(source).read_text() if not str(source).lstrip().startswith("{") else str(source)
    return Polyhedron.from_dict(json.loads(text))


def dump_polyhedron(poly: Polyhedron, extra: dict | None = None) -> str:
    data = poly.to_dict()
    if extra:
        data.update(extra)
    return canonical_dumps(data)


def tetrahedron(points: Sequence[Iterable[float]], name: str | None = None) -> Polyhedron:
    """Tetrahedron ABCD with face ``x`` opposite vertex ``X`` (a = BCD, ...)."""
    faces = [("a", (1, 2, 3)), ("b", (0, 2, 3)), ("c", (0, 1, 3)), ("d", (0, 1, 2))]
    return Polyhedron(np.array(points, dtype=float), faces, ("A", "B", "C", "D"), name)
