"""Random instances shared by the property tests."""
import numpy as np

from polybilliards import PhasePoint, regular_tetrahedron, tetrahedron
from polybilliards.errors import GeometryError


def random_tetrahedron(rng: np.random.Generator, min_volume: float = 0.05):
    """Random tetrahedron in [-1, 1]^3 that is not too flat."""
    while True:
        pts = rng.uniform(-1.0, 1.0, (4, 3))
        vol = abs(np.linalg.det(pts[1:] - pts[0])) / 6.0
        if vol < min_volume:
            continue
        try:
            return tetrahedron(pts)
        except GeometryError:
            continue


def near_regular(rng: np.random.Generator, delta: float):
    """Regular tetrahedron with each vertex moved by at most ``delta``."""
    base = regular_tetrahedron()
    g = rng.standard_normal((4, 3))
    g *= (delta * rng.random(4) ** (1 / 3) / np.linalg.norm(g, axis=1))[:, None]
    return base.with_vertices(base.vertices + g)


def random_phase_point(rng: np.random.Generator, poly, face: str | None = None, margin: float = 0.05):
    """Interior point of a face with an inward direction bounded away from tangency."""
    label = face if face is not None else poly.labels[rng.integers(len(poly.labels))]
    pts = poly.face_points(label)
    w = rng.dirichlet(np.ones(len(pts)))
    w = (1 - margin * len(pts)) * w + margin
    point = w @ pts
    n = poly.plane(label).normal
    while True:
        d = rng.standard_normal(3)
        d /= np.linalg.norm(d)
        if d @ n < -0.1:
            return PhasePoint(label, point, d)
        if d @ n > 0.1:
            return PhasePoint(label, point, -d)
