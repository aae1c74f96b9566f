"""Affine isometries of R^3.

An isometry is stored as ``x -> L x + t``. :func:`classify` sorts it into
identity / translation / rotation / screw motion / reflection / glide
reflection / rotoreflection and returns the geometric witness (axis, plane,
angle, screw or glide vector).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from .errors import (
    AxisParallelError,
    IsometryError,
    NoTransversalSectionError,
    RodriguesError,
)

ORTHO_TOL = 1e-12
ANGLE_TOL = 1e-9
EIGEN_TOL = 1e-9
RESIDUAL_TOL = 1e-9


def _vec3(x) -> np.ndarray:
    v = np.array(x, dtype=float).reshape(3)
    v.flags.writeable = False
    return v


def _canonical_sign(v: np.ndarray) -> np.ndarray:
    """Flip ``v`` so that its first clearly non-zero component is positive."""
    for c in v:
        if abs(c) > 1e-9:
            return v if c > 0 else -v
    return v


def rotation_matrix(axis, angle: float) -> np.ndarray:
    """Counterclockwise rotation by ``angle`` about the unit ``axis``."""
    u = np.asarray(axis, dtype=float)
    u = u / np.linalg.norm(u)
    K = np.array([[0.0, -u[2], u[1]], [u[2], 0.0, -u[0]], [-u[1], u[0], 0.0]])
    return np.eye(3) + math.sin(angle) * K + (1.0 - math.cos(angle)) * (K @ K)


@dataclass(frozen=True, eq=False)
class AffineIsometry:
    """The map ``x -> linear @ x + translation``."""

    linear: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        L = np.array(self.linear, dtype=float).reshape(3, 3)
        err = np.abs(L.T @ L - np.eye(3)).max()
        if err > ORTHO_TOL:
            raise IsometryError(f"linear part is not orthogonal (|L^T L - I| = {err:.2e})")
        L.flags.writeable = False
        object.__setattr__(self, "linear", L)
        object.__setattr__(self, "translation", _vec3(self.translation))

    @classmethod
    def identity(cls) -> "AffineIsometry":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def translation_by(cls, v) -> "AffineIsometry":
        return cls(np.eye(3), v)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return x @ self.linear.T + self.translation

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.linear))

    def inverse(self) -> "AffineIsometry":
        Lt = self.linear.T
        return AffineIsometry(Lt, -Lt @ self.translation)

    def to_dict(self) -> dict:
        return {"L": [float(x) for x in self.linear.ravel()], "t": [float(x) for x in self.translation]}

    @classmethod
    def from_dict(cls, data: dict) -> "AffineIsometry":
        return cls(np.reshape(data["L"], (3, 3)), data["t"])


def compose(a: AffineIsometry, b: AffineIsometry) -> AffineIsometry:
    """``a o b``: apply ``b`` first, then ``a``."""
    return AffineIsometry(a.linear @ b.linear, a.linear @ b.translation + a.translation)


class IsometryTag(str, Enum):
    IDENTITY = "identity"
    TRANSLATION = "translation"
    ROTATION = "rotation"
    SCREW_MOTION = "screw_motion"
    REFLECTION = "reflection"
    GLIDE_REFLECTION = "glide_reflection"
    ROTOREFLECTION = "rotoreflection"


@dataclass(frozen=True, eq=False)
class IsometryClass:
    """Classification of an isometry with its witness.

    ``point`` and ``direction`` describe the axis (rotation, screw motion,
    rotoreflection) or a point of the mirror plane and its unit normal
    (reflection, glide reflection). ``vector`` is the translation, screw or
    glide vector; ``angle`` is in (0, pi] for the rotational kinds.
    """

    tag: IsometryTag
    point: np.ndarray | None = None
    direction: np.ndarray | None = None
    angle: float | None = None
    vector: np.ndarray | None = None

    def reconstruct(self) -> AffineIsometry:
        tag = self.tag
        if tag is IsometryTag.IDENTITY:
            return AffineIsometry.identity()
        if tag is IsometryTag.TRANSLATION:
            return AffineIsometry.translation_by(self.vector)
        p, u = self.point, self.direction
        if tag in (IsometryTag.ROTATION, IsometryTag.SCREW_MOTION):
            R = rotation_matrix(u, self.angle)
            shift = self.vector if self.vector is not None else np.zeros(3)
            return AffineIsometry(R, p - R @ p + shift)
        if tag in (IsometryTag.REFLECTION, IsometryTag.GLIDE_REFLECTION):
            M = np.eye(3) - 2.0 * np.outer(u, u)
            shift = self.vector if self.vector is not None else np.zeros(3)
            return AffineIsometry(M, p - M @ p + shift)
        M = (np.eye(3) - 2.0 * np.outer(u, u)) @ rotation_matrix(u, self.angle)
        return AffineIsometry(M, p - M @ p)

    def to_dict(self) -> dict:
        def lst(v):
            return None if v is None else [float(x) for x in v]

        return {
            "tag": self.tag.value,
            "point": lst(self.point),
            "direction": lst(self.direction),
            "angle": self.angle,
            "vector": lst(self.vector),
        }


class FixedDirection(NamedTuple):
    """Eigenvalue-1 eigenspace of an orthogonal map.

    ``direction`` is set only when the eigenspace is a line.
    """

    direction: np.ndarray | None
    dimension: int


def fixed_eigendirection(L, tol: float = EIGEN_TOL) -> FixedDirection:
    """Unit eigenvector of ``L`` for eigenvalue 1, via the null space of ``L - I``."""
    L = np.asarray(L, dtype=float)
    _, sv, vt = np.linalg.svd(L - np.eye(3))
    dim = int(np.sum(sv < tol))
    if dim != 1:
        return FixedDirection(None, dim)
    return FixedDirection(_canonical_sign(vt[-1]), 1)


def _axial(M: np.ndarray) -> np.ndarray:
    return np.array([M[2, 1] - M[1, 2], M[0, 2] - M[2, 0], M[1, 0] - M[0, 1]])


def _rotation_angle_estimate(L: np.ndarray) -> float:
    # |L - I|_F = 2 sqrt(2) sin(angle/2); accurate for tiny angles, unlike arccos
    dev = np.linalg.norm(L - np.eye(3))
    return 2.0 * math.asin(min(1.0, dev / (2.0 * math.sqrt(2.0))))


def classify(a: AffineIsometry) -> IsometryClass:
    L, t = a.linear, a.translation
    zero = 1e-9 * (1.0 + np.linalg.norm(t))
    I = np.eye(3)
    if a.det > 0:
        if _rotation_angle_estimate(L) < ANGLE_TOL:
            if np.linalg.norm(t) < zero:
                return IsometryClass(IsometryTag.IDENTITY)
            return IsometryClass(IsometryTag.TRANSLATION, vector=_vec3(t))
        _, _, vt = np.linalg.svd(L - I)
        u = vt[-1]
        sin_part = 0.5 * (u @ _axial(L))
        cos_part = 0.5 * (np.trace(L) - 1.0)
        angle = math.atan2(sin_part, cos_part)
        if angle < 0:
            u, angle = -u, -angle
        screw = (u @ t) * u
        point = np.linalg.lstsq(L - I, -(t - screw), rcond=None)[0]
        if np.linalg.norm(screw) < zero:
            return IsometryClass(IsometryTag.ROTATION, _vec3(point), _vec3(u), angle, None)
        return IsometryClass(IsometryTag.SCREW_MOTION, _vec3(point), _vec3(u), angle, _vec3(screw))

    _, sv, vt = np.linalg.svd(L - I)
    fixed_dim = int(np.sum(sv < EIGEN_TOL))
    if fixed_dim == 2:
        _, _, vt_neg = np.linalg.svd(L + I)
        n = _canonical_sign(vt_neg[-1])
        c = 0.5 * (t @ n)
        glide = t - (t @ n) * n
        if np.linalg.norm(glide) < zero:
            return IsometryClass(IsometryTag.REFLECTION, _vec3(c * n), _vec3(n), None, None)
        return IsometryClass(IsometryTag.GLIDE_REFLECTION, _vec3(c * n), _vec3(n), None, _vec3(glide))

    _, sv_neg, vt_neg = np.linalg.svd(L + I)
    if np.sum(sv_neg < EIGEN_TOL) == 3:  # central inversion
        u, angle = np.array([0.0, 0.0, 1.0]), math.pi
    else:
        u = vt_neg[-1]
        angle = math.atan2(0.5 * (u @ _axial(L)), 0.5 * (np.trace(L) + 1.0))
        if angle < 0:
            u, angle = -u, -angle
    point = np.linalg.solve(L - I, -t)
    return IsometryClass(IsometryTag.ROTOREFLECTION, _vec3(point), _vec3(u), angle, None)


@dataclass(frozen=True, eq=False)
class AxisAngle:
    """Rotation by ``angle`` (radians, in (0, 2 pi)) about the unit ``axis``."""

    axis: np.ndarray
    angle: float

    def __post_init__(self):
        u = np.array(self.axis, dtype=float).reshape(3)
        norm = np.linalg.norm(u)
        if norm == 0:
            raise IsometryError("rotation axis must be non-zero")
        object.__setattr__(self, "axis", _vec3(u / norm))
        object.__setattr__(self, "angle", float(self.angle))

    @property
    def half_tangent(self) -> np.ndarray:
        """``tan(angle / 2) * axis``."""
        return math.tan(self.angle / 2.0) * self.axis

    @classmethod
    def from_half_tangent(cls, t) -> "AxisAngle":
        t = np.asarray(t, dtype=float)
        size = np.linalg.norm(t)
        if size == 0:
            raise RodriguesError("zero half-tangent vector: the rotation is the identity")
        return cls(t / size, 2.0 * math.atan(size))

    @classmethod
    def from_matrix(cls, R) -> "AxisAngle":
        c = classify(AffineIsometry(R, np.zeros(3)))
        if c.tag is not IsometryTag.ROTATION:
            raise IsometryError(f"matrix is not a non-trivial rotation (got {c.tag.value})")
        return cls(c.direction, c.angle)

    def matrix(self) -> np.ndarray:
        return rotation_matrix(self.axis, self.angle)


def rodrigues_compose(r1: AxisAngle, r2: AxisAngle) -> AxisAngle:
    """Rotation ``r1 @ r2`` (``r2`` applied first) from half-angle tangent vectors.

    Raises:
        RodriguesError: if an input is (near) the identity or a half turn, or
            the product is (near) a half turn or the identity.
    """
    for name, r in (("first", r1), ("second", r2)):
        phase = r.angle % (2.0 * math.pi)
        if min(phase, 2.0 * math.pi - phase) < ANGLE_TOL:
            raise RodriguesError(f"{name} rotation is the identity")
        if abs(phase - math.pi) < ANGLE_TOL:
            raise RodriguesError(f"{name} rotation has angle pi")
    t1, t2 = r1.half_tangent, r2.half_tangent
    denom = 1.0 - t1 @ t2
    if abs(denom) < 1e-9:
        raise RodriguesError("resultant angle is approximately pi")
    return AxisAngle.from_half_tangent((t1 + t2 + np.cross(t1, t2)) / denom)


def axis_point_on_face(s: AffineIsometry, fp) -> np.ndarray:
    """Point where the fixed axis of ``s`` crosses the plane ``fp``.

    Solves the bordered system ``[[L - I, -u], [n^T, 0]] [m; lam] = [-t; d]``,
    i.e. ``s(m) - m`` is parallel to the axis direction ``u`` and ``m`` lies on
    the plane.
    """
    L, t = s.linear, s.translation
    fixed = fixed_eigendirection(L)
    if s.det < 0 or fixed.dimension != 1:
        raise IsometryError(
            f"need a rotation or screw motion (fixed eigenspace of dimension {fixed.dimension}, det {s.det:+.0f})"
        )
    u, n = fixed.direction, np.asarray(fp.normal, dtype=float)
    if abs(u @ n) < 1e-9:
        raise AxisParallelError("axis parallel to the face plane")
    M = np.zeros((4, 4))
    M[:3, :3] = L - np.eye(3)
    M[:3, 3] = -u
    M[3, :3] = n
    rhs = np.concatenate([-t, [fp.offset]])
    sol = np.linalg.solve(M, rhs)
    residual = np.linalg.norm(M @ sol - rhs)
    if residual > RESIDUAL_TOL:
        raise IsometryError(f"axis/plane system residual {residual:.2e} too large")
    return sol[:3]


@dataclass(frozen=True, eq=False)
class GlideSection:
    """Line ``point + R direction`` where a glide plane meets a face plane."""

    point: np.ndarray
    direction: np.ndarray
    glide: np.ndarray
    plane_normal: np.ndarray
    plane_offset: float


def glide_plane_section(s: AffineIsometry, fp) -> GlideSection:
    c = classify(s)
    if c.tag is not IsometryTag.GLIDE_REFLECTION:
        raise IsometryError(f"need a glide reflection, got {c.tag.value}")
    g_normal = c.direction
    g_offset = float(g_normal @ c.point)
    n = np.asarray(fp.normal, dtype=float)
    line_dir = np.cross(g_normal, n)
    size = np.linalg.norm(line_dir)
    if size < 1e-9:
        raise NoTransversalSectionError("glide plane is parallel to the face plane")
    line_dir /= size
    point = np.linalg.lstsq(np.vstack([g_normal, n]), np.array([g_offset, fp.offset]), rcond=None)[0]
    return GlideSection(_vec3(point), _vec3(line_dir), c.vector, g_normal, g_offset)
