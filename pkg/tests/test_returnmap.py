import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polybilliards import (
    PhasePoint,
    find_periodic,
    obtuse_tetrahedron,
    regular_face_basis,
    regular_tetrahedron,
    trace,
    unit_cube,
)
from polybilliards.errors import PreconditionError
from polybilliards.isometry import rotation_matrix
from polybilliards.returnmap import (
    FaceBasis,
    InvariantConic,
    PlanarAffineMap,
    _edge_lines,
    beam_ellipse,
    face_polygon,
    first_return_map,
    fixed_point,
    invariant_conic,
    periodic_prefix_length,
)

SQ2 = math.sqrt(2.0)


@pytest.fixture(scope="module")
def regular_map():
    poly = regular_tetrahedron()
    fb = regular_face_basis()
    r = first_return_map(poly, "abcd", fb)
    return poly, fb, r


def closed_form_conic(A):
    """Invariant form of a 2x2 map with det 1, up to scale."""
    (a, b), (c, d) = A
    Q = np.array([[c, (d - a) / 2], [(d - a) / 2, -b]])
    return Q if np.trace(Q) > 0 else -Q


class TestFirstReturnMap:
    def test_linear_part(self, regular_map):
        _, _, r = regular_map
        np.testing.assert_allclose(81 * r.A, [[-83, 28], [-12, -75]], atol=1e-12)
        assert r.det == pytest.approx(1.0, abs=1e-12)
        assert r.trace == pytest.approx(-158 / 81, abs=1e-12)

    def test_offset_and_fixed_point(self, regular_map):
        poly, fb, r = regular_map
        np.testing.assert_allclose(81 * r.B, SQ2 * np.array([-15, -9]), atol=1e-12)
        fp = fixed_point(r)
        np.testing.assert_allclose(fp, SQ2 / 20 * np.array([-2, -1]), atol=1e-12)
        m = find_periodic(poly, "abcd").point
        np.testing.assert_allclose(fp, fb.coords(m), atol=1e-12)
        np.testing.assert_allclose((np.eye(2) - r.A) @ fp, r.B, atol=1e-12)

    def test_simulation_oracle(self, regular_map):
        poly, fb, r = regular_map
        res = find_periodic(poly, "abcd")
        conic = invariant_conic(r)
        ell = beam_ellipse(r, conic, face_polygon(poly, "a", fb))
        pts = ell.sample_inside(20, np.random.default_rng(11))
        for x in pts:
            tr = trace(poly, PhasePoint("a", fb.point(x), res.direction), 4)
            assert tr.full_coding == tuple("abcda")
            np.testing.assert_allclose(fb.coords(tr.end.point), r(x), atol=1e-8)
            np.testing.assert_allclose(tr.end.direction, res.direction, atol=1e-12)

    def test_basis_on_other_face(self):
        poly = regular_tetrahedron()
        with pytest.raises(PreconditionError):
            first_return_map(poly, "abcd", FaceBasis.orthonormal(poly, "b"))

    def test_requires_unique_point(self):
        with pytest.raises(PreconditionError):
            first_return_map(obtuse_tetrahedron(), "abcd", FaceBasis.orthonormal(obtuse_tetrahedron(), "a"))
        with pytest.raises(PreconditionError):
            first_return_map(unit_cube(), "cc'", FaceBasis.orthonormal(unit_cube(), "c"))

    def test_orthonormal_basis_same_dynamics(self):
        poly = regular_tetrahedron()
        r = first_return_map(poly, "abcd", FaceBasis.orthonormal(poly, "a"))
        assert r.trace == pytest.approx(-158 / 81, abs=1e-12)
        assert r.det == pytest.approx(1.0, abs=1e-12)


class TestFixedPoint:
    def test_zero_linear_part(self):
        np.testing.assert_array_equal(fixed_point(PlanarAffineMap(np.zeros((2, 2)), [3.0, -1.0])), [3.0, -1.0])

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_random_contractions(self, seed):
        rng = np.random.default_rng(seed)
        A = rng.uniform(-1, 1, (2, 2))
        A *= 0.9 / max(np.abs(np.linalg.eigvals(A)).max(), 1e-3)
        r = PlanarAffineMap(A, rng.uniform(-1, 1, 2))
        p = fixed_point(r)
        assert np.linalg.norm(r(p) - p) <= 1e-12

    def test_eigenvalue_one(self):
        with pytest.raises(PreconditionError):
            fixed_point(PlanarAffineMap(np.eye(2), [1.0, 0.0]))


class TestInvariantConic:
    def test_rotation_gives_identity_form(self):
        A = rotation_matrix([0, 0, 1], 0.7)[:2, :2]
        conic = invariant_conic(PlanarAffineMap(A, [0.0, 0.0]))
        np.testing.assert_allclose(conic.Q, np.eye(2), atol=1e-12)

    def test_regular_matches_closed_form(self, regular_map):
        _, _, r = regular_map
        conic = invariant_conic(r)
        expected = closed_form_conic(r.A)
        expected /= np.linalg.eigvalsh(expected).max()
        np.testing.assert_allclose(conic.Q, expected, atol=1e-12)
        assert np.abs(r.A.T @ conic.Q @ r.A - conic.Q).max() <= 1e-9

    def test_level_conserved(self, regular_map):
        _, _, r = regular_map
        conic = invariant_conic(r)
        start = conic.center + np.array([0.01, 0.02])
        levels = conic.value(r.orbit(start, 1000))
        assert np.abs(levels - levels[0]).max() <= 1e-8

    @settings(max_examples=100, deadline=None)
    @given(st.floats(0.1, 3.0), st.floats(0.2, 5.0), st.floats(-2, 2))
    def test_random_elliptic(self, angle, stretch, shear):
        P = np.array([[stretch, shear], [0.0, 1.0]])
        A = P @ rotation_matrix([0, 0, 1], angle)[:2, :2] @ np.linalg.inv(P)
        conic = invariant_conic(PlanarAffineMap(A, [0.0, 0.0]))
        assert np.abs(A.T @ conic.Q @ A - conic.Q).max() <= 1e-9
        assert np.linalg.eigvalsh(conic.Q).max() == pytest.approx(1.0)

    def test_hyperbolic_rejected(self):
        with pytest.raises(PreconditionError):
            invariant_conic(PlanarAffineMap(np.diag([2.0, 0.5]), [0.0, 0.0]))


class TestBeamEllipse:
    def test_incircle(self):
        tri = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3) / 2]])
        center = tri.mean(axis=0)
        conic = InvariantConic(np.eye(2), center)
        ell = beam_ellipse(PlanarAffineMap(np.eye(2), [0, 0]), conic, tri)
        assert ell.lambda_max == pytest.approx((math.sqrt(3) / 6) ** 2, rel=1e-12)
        assert ell.tangent_edges == (0, 1, 2)

    def test_regular_value(self, regular_map):
        poly, fb, r = regular_map
        ell = beam_ellipse(r, invariant_conic(r), face_polygon(poly, "a", fb))
        assert ell.lambda_max == pytest.approx(0.010364745084375779, rel=1e-12)
        assert len(ell.tangent_edges) >= 1

    def test_maximal(self, regular_map):
        poly, fb, r = regular_map
        tri = face_polygon(poly, "a", fb)
        ell = beam_ellipse(r, invariant_conic(r), tri)
        inside = ell.boundary(2000, 1 - 1e-9)
        outside = ell.boundary(2000, math.sqrt(1 + 1e-6))
        e, d = _edge_lines(tri, tri.mean(axis=0))
        assert np.all(inside @ e.T - d > 0)
        assert np.any(outside @ e.T - d < 0)

    def test_center_outside(self):
        tri = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        with pytest.raises(PreconditionError):
            beam_ellipse(PlanarAffineMap(np.eye(2), [0, 0]), InvariantConic(np.eye(2), np.array([2.0, 2.0])), tri)

    def test_only_center_is_fixed(self, regular_map):
        poly, fb, r = regular_map
        ell = beam_ellipse(r, invariant_conic(r), face_polygon(poly, "a", fb))
        pts = ell.sample_inside(200, np.random.default_rng(2))
        moved = np.linalg.norm(r(pts) - pts, axis=1)
        dist = np.linalg.norm(pts - ell.center, axis=1)
        # r - id is invertible, so displacement is bounded below by distance to the centre
        smin = np.linalg.svd(r.A - np.eye(2), compute_uv=False).min()
        assert np.all(moved >= smin * dist * (1 - 1e-9))
        assert np.all(moved > 0)

    def test_exports(self, regular_map):
        poly, fb, r = regular_map
        ell = beam_ellipse(r, invariant_conic(r), face_polygon(poly, "a", fb))
        d = ell.to_dict()
        assert len(d["Q"]) == 3 and d["lambda_max"] == ell.lambda_max
        rows = ell.boundary_csv(10).splitlines()
        assert rows[0] == "x,y" and len(rows) == 11
        levels = ell.level(ell.boundary(50))
        np.testing.assert_allclose(levels, ell.lambda_max, rtol=1e-12)


def test_prefix_length_outside_face(regular_map):
    poly, fb, r = regular_map
    res = find_periodic(poly, "abcd")
    assert periodic_prefix_length(poly, "abcd", res.phase_point, 12) == 13
    far = PhasePoint("a", fb.point([5.0, 5.0]), res.direction)
    assert periodic_prefix_length(poly, "abcd", far, 12) == 0
