"""Bundled polyhedra.

Tetrahedra are ABCD with face ``x`` opposite vertex ``X``. Boxes and prisms
label opposite faces ``a``/``a'``, ``b``/``b'``, ... and prism caps ``z``
(bottom) / ``z'`` (top).
"""
from __future__ import annotations

import math

import numpy as np

from .geometry import Polyhedron, tetrahedron
from .returnmap import FaceBasis

SQRT2 = math.sqrt(2.0)


def regular_tetrahedron() -> Polyhedron:
    """Edge-1 regular tetrahedron with vertices at sqrt(2)/4 * (+-1, +-1, +-1)."""
    k = SQRT2 / 4.0
    pts = k * np.array([[-1, -1, -1], [-1, 1, 1], [1, 1, -1], [1, -1, 1]], dtype=float)
    return tetrahedron(pts, "regular-tetrahedron")


def right_tetrahedron(a: float = 1.0, b: float = 1.0) -> Polyhedron:
    """Three right angles at A = origin: B = (a,0,0), C = (0,b,0), D = (0,0,1)."""
    pts = [[0, 0, 0], [a, 0, 0], [0, b, 0], [0, 0, 1]]
    return tetrahedron(pts, f"right-tetrahedron(a={a:g},b={b:g})")


def obtuse_tetrahedron() -> Polyhedron:
    """A(0,0,0) B(2,0,0) C(1,1,0) D(3,2,1); the face ABD is obtuse."""
    return tetrahedron([[0, 0, 0], [2, 0, 0], [1, 1, 0], [3, 2, 1]], "obtuse-tetrahedron")


def unit_cube() -> Polyhedron:
    pts = [[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)]
    idx = {tuple(p): i for i, p in enumerate(pts)}

    def quad(axis, value):
        corners = []
        for u, v in ((0, 0), (1, 0), (1, 1), (0, 1)):
            p = [u, v]
            p.insert(axis, value)
            corners.append(idx[tuple(p)])
        return tuple(corners)

    faces = []
    for axis, name in enumerate("abc"):
        faces.append((name, quad(axis, 0)))
        faces.append((name + "'", quad(axis, 1)))
    return Polyhedron(np.array(pts, float), faces, name="unit-cube")


def right_prism(base, height: float = 1.0, name: str | None = None) -> Polyhedron:
    """Right prism over a convex polygon ``base`` (k x 2, counterclockwise).

    The side face over the base edge from vertex ``j + 1`` to ``j + 2`` gets
    label ``"abc..."[j]`` (for a triangle: the side opposite vertex ``j``).
    """
    base = np.asarray(base, dtype=float)
    k = len(base)
    bottom = np.column_stack([base, np.zeros(k)])
    top = np.column_stack([base, np.full(k, float(height))])
    verts = np.vstack([bottom, top])
    faces = [("z", tuple(range(k))), ("z'", tuple(range(k, 2 * k)))]
    for j in range(k):
        i0, i1 = (j + 1) % k, (j + 2) % k
        faces.append((chr(ord("a") + j), (i0, i1, k + i1, k + i0)))
    return Polyhedron(verts, faces, name=name)


def acute_prism() -> Polyhedron:
    """Unit-height right prism over the acute triangle (0,0), (2,0), (0.8,1.5)."""
    return right_prism([[0.0, 0.0], [2.0, 0.0], [0.8, 1.5]], 1.0, "acute-prism")


def regular_face_basis() -> FaceBasis:
    """Basis of face a of :func:`regular_tetrahedron` used for the return map."""
    return FaceBasis([SQRT2 / 4.0, 0.0, 0.0], [1.0, 0.0, -1.0], [1.0, -2.0, 1.0])


FIXTURES = {
    "regular-tetrahedron": (
        regular_tetrahedron,
        "regular tetrahedron, edge 1; A=s(-1,-1,-1) B=s(-1,1,1) C=s(1,1,-1) D=s(1,-1,1), s=sqrt(2)/4",
    ),
    "right-tetrahedron": (right_tetrahedron, "right tetrahedron A(0,0,0) B(1,0,0) C(0,1,0) D(0,0,1)"),
    "obtuse-tetrahedron": (obtuse_tetrahedron, "obtuse tetrahedron A(0,0,0) B(2,0,0) C(1,1,0) D(3,2,1)"),
    "unit-cube": (unit_cube, "unit cube [0,1]^3; a/a' at x=0/1, b/b' at y=0/1, c/c' at z=0/1"),
    "acute-prism": (acute_prism, "right prism of height 1 over the acute triangle (0,0),(2,0),(0.8,1.5)"),
}


def get_fixture(name: str) -> Polyhedron:
    try:
        return FIXTURES[name][0]()
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; choose from {sorted(FIXTURES)}") from None
