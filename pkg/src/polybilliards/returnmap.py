"""First-return map to a face along a periodic word, and its invariant ellipses.

Points of face ``v0`` launched in the periodic direction ``theta`` come back to
``v0`` with the same direction after ``|v|`` bounces (``S_v theta = theta``).
Their landing point is ``s_v(x)`` pushed along ``theta`` back onto the face, an
affine map of the face. In face coordinates it is ``x -> A x + B``.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .billiard import trace, word_isometry
from .errors import PreconditionError
from .geometry import EPS_GEOM, FaceLocation, Polyhedron, point_in_face
from .periodic import PeriodicKind, find_periodic

DET_TOL = 1e-9
CONIC_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class FaceBasis:
    """Affine frame ``origin + x e1 + y e2`` of a face plane (not necessarily orthonormal)."""

    origin: np.ndarray
    e1: np.ndarray
    e2: np.ndarray

    def __post_init__(self):
        for name in ("origin", "e1", "e2"):
            v = np.array(getattr(self, name), dtype=float).reshape(3)
            v.flags.writeable = False
            object.__setattr__(self, name, v)
        if np.linalg.norm(np.cross(self.e1, self.e2)) < 1e-12:
            raise PreconditionError("face basis vectors are linearly dependent")

    @property
    def matrix(self) -> np.ndarray:
        return np.column_stack([self.e1, self.e2])

    @property
    def normal(self) -> np.ndarray:
        n = np.cross(self.e1, self.e2)
        return n / np.linalg.norm(n)

    def coords(self, x) -> np.ndarray:
        E = self.matrix
        rel = np.asarray(x, dtype=float) - self.origin
        return np.linalg.solve(E.T @ E, (rel @ E).T).T

    def point(self, c) -> np.ndarray:
        return self.origin + np.asarray(c, dtype=float) @ self.matrix.T

    def lies_on(self, fp) -> bool:
        n = fp.normal
        return (
            abs(fp.signed_distance(self.origin)) <= EPS_GEOM
            and abs(self.e1 @ n) <= 1e-12 * np.linalg.norm(self.e1)
            and abs(self.e2 @ n) <= 1e-12 * np.linalg.norm(self.e2)
        )

    @classmethod
    def orthonormal(cls, poly: Polyhedron, label: str) -> "FaceBasis":
        """Frame at the first vertex of the face, ``e1`` along its first edge."""
        pts = poly.face_points(label)
        n = poly.plane(label).normal
        e1 = pts[1] - pts[0]
        e1 /= np.linalg.norm(e1)
        return cls(pts[0], e1, np.cross(n, e1))


@dataclass(frozen=True, eq=False)
class PlanarAffineMap:
    """``V -> A V + B`` on face coordinates."""

    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "A", np.array(self.A, dtype=float).reshape(2, 2))
        object.__setattr__(self, "B", np.array(self.B, dtype=float).reshape(2))

    def __call__(self, p) -> np.ndarray:
        return np.asarray(p, dtype=float) @ self.A.T + self.B

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.A))

    @property
    def trace(self) -> float:
        return float(np.trace(self.A))

    def is_elliptic(self, tol: float = DET_TOL) -> bool:
        return abs(self.det - 1.0) <= tol and abs(self.trace) < 2.0

    def orbit(self, p, n: int) -> np.ndarray:
        """``p, r(p), ..., r^n(p)`` as an ``(n + 1, 2)`` array."""
        out = np.empty((n + 1, 2))
        out[0] = p
        for k in range(n):
            out[k + 1] = self(out[k])
        return out

    def to_dict(self) -> dict:
        return {"A": self.A.tolist(), "B": self.B.tolist()}


@dataclass(frozen=True, eq=False)
class InvariantConic:
    """Quadratic form ``Q`` (max eigenvalue 1) with ``A^T Q A = Q``, centred at the fixed point."""

    Q: np.ndarray
    center: np.ndarray
    level: float = 0.0

    def value(self, p) -> np.ndarray:
        d = np.asarray(p, dtype=float) - self.center
        return np.einsum("...i,ij,...j->...", d, self.Q, d)


def first_return_map(poly: Polyhedron, word: Sequence[str], fb: FaceBasis) -> PlanarAffineMap:
    """Affine first-return map of face ``word[0]`` along the periodic direction of ``word``.

    Raises:
        PreconditionError: if ``word`` has no unique periodic point, or ``fb``
            does not lie in the plane of face ``word[0]``.
    """
    result = find_periodic(poly, word)
    if result.kind is not PeriodicKind.UNIQUE_POINT:
        raise PreconditionError(f"word is not uniquely periodic ({result.kind.value}: {result.diagnostic})")
    fp = poly.plane(result.face)
    if not fb.lies_on(fp):
        raise PreconditionError(f"basis does not lie on face {result.face!r}")
    return return_map_along(poly, word, result.direction, fb)


def return_map_along(poly: Polyhedron, word: Sequence[str], theta, fb: FaceBasis) -> PlanarAffineMap:
    """Return map for launch direction ``theta`` (assumed fixed by ``S_v``)."""
    fp = poly.plane(word[0])
    L, s = word_isometry(poly, word)
    theta = np.asarray(theta, dtype=float)
    n, d = fp.normal, fp.offset
    rate = n @ theta
    # oblique projection onto the face plane along theta
    P = np.eye(3) - np.outer(theta, n) / rate
    M3 = P @ L
    c3 = P @ s.translation + theta * (d / rate)
    E, o = fb.matrix, fb.origin
    G_inv_Et = np.linalg.solve(E.T @ E, E.T)
    A = G_inv_Et @ M3 @ E
    B = G_inv_Et @ (M3 @ o + c3 - o)
    return PlanarAffineMap(A, B)


def fixed_point(r: PlanarAffineMap) -> np.ndarray:
    """``(I - A)^-1 B``.

    Raises:
        PreconditionError: if 1 is an eigenvalue of ``A``.
    """
    M = np.eye(2) - r.A
    if np.linalg.svd(M, compute_uv=False).min() < 1e-12:
        raise PreconditionError("A has eigenvalue 1: no unique fixed point")
    return np.linalg.solve(M, r.B)


def invariant_conic(r: PlanarAffineMap, tol: float = CONIC_TOL) -> InvariantConic:
    """Positive-definite ``Q`` with ``A^T Q A = Q`` for an elliptic ``A``."""
    A = r.A
    if abs(r.det - 1.0) > DET_TOL or not abs(r.trace) < 2.0:
        raise PreconditionError(f"map is not elliptic (det {r.det:.12g}, trace {r.trace:.12g})")
    cols = []
    for i, j in ((0, 0), (0, 1), (1, 1)):
        X = np.zeros((2, 2))
        X[i, j] = X[j, i] = 1.0
        cols.append((A.T @ X @ A - X).ravel())
    _, _, vt = np.linalg.svd(np.column_stack(cols))
    q = vt[-1]
    Q = np.array([[q[0], q[1]], [q[1], q[2]]])
    if np.trace(Q) < 0:
        Q = -Q
    eig = np.linalg.eigvalsh(Q)
    if eig.min() <= 0:
        raise PreconditionError("invariant form is not positive definite")
    Q = Q / eig.max()
    residual = np.abs(A.T @ Q @ A - Q).max()
    if residual > tol:
        raise PreconditionError(f"invariant form residual {residual:.2e} exceeds {tol:g}")
    return InvariantConic(Q, fixed_point(r))


@dataclass(frozen=True, eq=False)
class BeamEllipse:
    """Open ellipse ``{x : (x - c)^T Q (x - c) < lambda_max}`` inscribed in a polygon."""

    center: np.ndarray
    Q: np.ndarray
    lambda_max: float
    tangent_edges: tuple[int, ...]
    tangency_points: np.ndarray

    def level(self, p) -> np.ndarray:
        d = np.asarray(p, dtype=float) - self.center
        return np.einsum("...i,ij,...j->...", d, self.Q, d)

    def contains(self, p) -> np.ndarray:
        return self.level(p) < self.lambda_max

    def _frame(self) -> np.ndarray:
        return np.linalg.cholesky(np.linalg.inv(self.Q))

    def boundary(self, n: int = 200, radius_factor: float = 1.0) -> np.ndarray:
        """``n`` points on the ellipse scaled by ``radius_factor`` about the centre."""
        ang = 2.0 * np.pi * np.arange(n) / n
        z = np.column_stack([np.cos(ang), np.sin(ang)])
        return self.center + radius_factor * np.sqrt(self.lambda_max) * z @ self._frame().T

    def sample_inside(self, n: int, rng: np.random.Generator, radius_factor: float = 1.0) -> np.ndarray:
        """Uniform samples from the (scaled) open ellipse."""
        ang = rng.uniform(0.0, 2.0 * np.pi, n)
        rad = np.sqrt(rng.uniform(0.0, 1.0, n))
        z = rad[:, None] * np.column_stack([np.cos(ang), np.sin(ang)])
        return self.center + radius_factor * np.sqrt(self.lambda_max) * z @ self._frame().T

    def to_dict(self) -> dict:
        Q = self.Q
        return {
            "center": self.center.tolist(),
            "Q": [float(Q[0, 0]), float(Q[0, 1]), float(Q[1, 1])],
            "lambda_max": float(self.lambda_max),
            "tangent_edges": list(self.tangent_edges),
            "tangency_points": self.tangency_points.tolist(),
        }

    def boundary_csv(self, n: int = 200) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["x", "y"])
        for x, y in self.boundary(n):
            writer.writerow([repr(float(x)), repr(float(y))])
        return buf.getvalue()


def _edge_lines(polygon: np.ndarray, inside: np.ndarray):
    """Inward normals ``e`` and offsets ``d`` with the polygon = ``{e . x >= d}``."""
    nxt = np.roll(polygon, -1, axis=0)
    edge = nxt - polygon
    e = np.column_stack([-edge[:, 1], edge[:, 0]])
    d = np.einsum("ij,ij->i", e, polygon)
    flip = e @ inside < d
    e[flip] *= -1
    d[flip] *= -1
    return e, d


def beam_ellipse(r: PlanarAffineMap, conic: InvariantConic, polygon) -> BeamEllipse:
    """Largest ``Q``-ellipse about the fixed point that fits in the convex ``polygon``.

    Raises:
        PreconditionError: if the centre is not strictly inside the polygon.
    """
    poly2 = np.asarray(polygon, dtype=float)
    c = conic.center
    e, d = _edge_lines(poly2, poly2.mean(axis=0))
    slack = e @ c - d
    if np.any(slack <= 0):
        raise PreconditionError("ellipse centre is not strictly inside the polygon")
    Qi = np.linalg.inv(conic.Q)
    weight = np.einsum("ij,jk,ik->i", e, Qi, e)
    lams = slack**2 / weight
    lam = float(lams.min())
    tangent = tuple(int(i) for i in np.flatnonzero(lams <= lam * (1 + 1e-9)))
    touch = np.array([c - Qi @ e[i] * slack[i] / weight[i] for i in tangent])
    return BeamEllipse(c.copy(), conic.Q.copy(), lam, tangent, touch)


def face_polygon(poly: Polyhedron, label: str, fb: FaceBasis) -> np.ndarray:
    return fb.coords(poly.face_points(label))


def periodic_prefix_length(poly: Polyhedron, word: Sequence[str], pp, n_bounces: int) -> int:
    """How many leading letters of the orbit coding (start face included) follow ``word`` repeated.

    Returns 0 when the start point is not interior to its face.
    """
    word = tuple(word)
    if pp.face != word[0]:
        return 0
    fp = poly.plane(pp.face)
    if abs(fp.signed_distance(pp.point)) > EPS_GEOM or point_in_face(poly, pp.face, pp.point) is not FaceLocation.INTERIOR:
        return 0
    tr = trace(poly, pp, n_bounces)
    count = 0
    for k, lab in enumerate(tr.full_coding):
        if lab != word[k % len(word)]:
            break
        count += 1
    return count
