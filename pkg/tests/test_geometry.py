import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pyramask.errors import (
    DegenerateInput,
    DegeneratePlane,
    DegenerateQuad,
    HorizontalPlane,
    NonConvexInput,
    ParallelLines,
    SingularDecomposition,
)
from pyramask.geometry import (
    Box,
    Line2,
    Plane,
    Quad,
    convex_hull,
    decompose,
    line_intersection,
    min_area_rect,
    plane_base_intersection,
    plane_through,
    polygon_iou,
    quad_center,
)

from conftest import random_star_quad
from oracles import inside_convex, monte_carlo_iou

SQUARE = Quad([(0, 0), (2, 0), (2, 2), (0, 2)])
RECT = Quad([(0, 0), (4, 0), (4, 2), (0, 2)])


class TestQuad:
    def test_canonical_order_is_kept_for_icdar_order(self):
        np.testing.assert_array_equal(SQUARE.vertices, [(0, 0), (2, 0), (2, 2), (0, 2)])

    def test_reversed_and_rotated_input_normalizes(self):
        q = Quad([(0, 2), (2, 2), (2, 0), (0, 0)])
        assert q == SQUARE
        q = Quad([(2, 2), (0, 2), (0, 0), (2, 0)])
        assert q == SQUARE

    def test_start_vertex_breaks_y_ties_by_x(self):
        q = Quad([(3, 0), (3, 1), (0, 1), (0, 0)])
        assert tuple(q.vertices[0]) == (0.0, 0.0)

    @pytest.mark.parametrize("pts", [
        [(0, 0), (1, 0), (2, 0), (3, 0)],  # zero area
        [(0, 0), (2, 2), (2, 0), (0, 3)],  # bow tie
        [(0, 0), (np.nan, 0), (1, 1), (0, 1)],
    ])
    def test_rejects_invalid(self, pts):
        with pytest.raises(DegenerateQuad):
            Quad(pts)

    def test_rejects_quad_whose_centroid_misses_an_edge(self):
        # deep dart: the vertex centroid falls outside the kernel
        with pytest.raises(DegenerateQuad):
            Quad([(0, 0), (10, 0), (1, 1), (0, 10)])

    def test_flat_round_trip(self):
        assert Quad.from_flat(RECT.flat()) == RECT

    def test_convexity(self):
        assert SQUARE.is_convex()
        dart = Quad([(0, 0), (10, 0), (4, 4), (0, 10)])
        assert not dart.is_convex()


@pytest.mark.parametrize("q, expected", [
    (SQUARE, (1, 1)),
    (RECT, (2, 1)),
    (Quad([(0, 0), (4, 0), (5, 3), (1, 2)]), (2.5, 1.25)),
])
def test_quad_center(q, expected):
    np.testing.assert_allclose(quad_center(q), expected, atol=1e-15)


class TestDecompose:
    def test_identity_basis(self):
        assert decompose((0, 0), (1, 0), (0, 1), (0.3, 0.4)) == pytest.approx((0.3, 0.4), abs=1e-15)

    def test_halfway_along_om(self):
        assert decompose((2, 1), (0, 0), (4, 0), (1, 0.5)) == pytest.approx((0.5, 0.0), abs=1e-15)

    def test_subnormal_ray_overflows(self):
        with pytest.raises(SingularDecomposition):
            decompose((0, 1), (2, 0), (1e-308, 1), (0, 0))

    def test_collinear_rays(self):
        with pytest.raises(SingularDecomposition):
            decompose((0, 0), (1, 0), (2, 0), (1, 1))

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.floats(-100, 100), min_size=8, max_size=8))
    def test_reconstruction(self, c):
        o, m, n, p = np.array(c).reshape(4, 2)
        om, on = m - o, n - o
        if abs(om[0] * on[1] - om[1] * on[0]) <= 1e-3 * np.linalg.norm(om) * np.linalg.norm(on):
            return
        try:
            alpha, beta = decompose(o, m, n, p)
        except SingularDecomposition:
            # only legitimate when the exact answer is beyond float range
            assert np.linalg.norm(p - o) / min(np.linalg.norm(om), np.linalg.norm(on)) > 1e300
            return
        rebuilt = alpha * om + beta * on
        scale = max(np.linalg.norm(p - o), 1.0)
        assert np.linalg.norm(rebuilt - (p - o)) / scale < 1e-9


class TestPlanes:
    def test_plane_z_equals_y(self):
        pl = plane_through((0, 0, 0), (2, 0, 0), (1, 1, 1))
        assert (pl.a, pl.b, pl.d) == pytest.approx((0, -1, 0), abs=1e-15)

    def test_plane_z_equals_x(self):
        pl = plane_through((0, 0, 0), (0, 2, 0), (1, 1, 1))
        assert (pl.a, pl.b, pl.d) == pytest.approx((-1, 0, 0), abs=1e-15)

    def test_collinear(self):
        with pytest.raises(DegeneratePlane):
            plane_through((0, 0, 0), (1, 0, 0), (2, 0, 0))

    def test_vertical(self):
        with pytest.raises(DegeneratePlane):
            plane_through((0, 0, 0), (1, 0, 0), (0.5, 0, 1))

    def test_points_satisfy_plane(self, rng):
        for _ in range(100):
            pts = rng.uniform(-50, 50, (3, 3))
            pl = plane_through(*pts)
            assert np.all(np.abs(pl.signed_residual(pts)) < 1e-9)

    def test_base_line_of_z_equals_y(self):
        line = plane_base_intersection(Plane(0, -1, 0))
        assert abs(line.q) == pytest.approx(1.0) and line.p == 0 and line.r == 0

    def test_base_line_of_z_equals_x(self):
        line = plane_base_intersection(Plane(-1, 0, 0))
        assert abs(line.p) == pytest.approx(1.0) and line.q == 0 and line.r == 0

    def test_horizontal_plane(self):
        with pytest.raises(HorizontalPlane):
            plane_base_intersection(Plane(0, 0, -0.5))

    def test_base_line_passes_through_base_points(self, rng):
        for _ in range(200):
            b1, b2 = rng.uniform(-50, 50, (2, 2))
            apex = np.append(rng.uniform(-50, 50, 2), rng.uniform(0.1, 2))
            try:
                pl = plane_through(np.append(b1, 0), np.append(b2, 0), apex)
            except DegeneratePlane:
                continue
            line = plane_base_intersection(pl)
            assert np.all(np.abs(line.signed_distance([b1, b2])) < 1e-9)


class TestLines:
    def test_axes(self):
        np.testing.assert_allclose(line_intersection(Line2(1, 0, 0), Line2(0, 1, 0)), (0, 0))

    def test_offset(self):
        np.testing.assert_allclose(line_intersection(Line2(1, 0, -1), Line2(0, 1, -2)), (1, 2))

    def test_parallel(self):
        with pytest.raises(ParallelLines):
            line_intersection(Line2(0, 1, 0), Line2(0, 1, -1))

    def test_normalized(self):
        line = Line2(3, 4, 10)
        assert (line.p, line.q, line.r) == pytest.approx((0.6, 0.8, 2.0))


class TestIoU:
    def test_identical(self):
        assert polygon_iou(RECT, RECT) == pytest.approx(1.0, abs=1e-15)

    def test_half_overlap(self):
        a = Quad([(0, 0), (1, 0), (1, 1), (0, 1)])
        b = Quad([(0.5, 0), (1.5, 0), (1.5, 1), (0.5, 1)])
        assert polygon_iou(a, b) == pytest.approx(1 / 3, abs=1e-12)

    def test_disjoint(self):
        a = Quad([(0, 0), (1, 0), (1, 1), (0, 1)])
        assert polygon_iou(a, a.translated(5, 0)) == 0.0

    def test_nested(self):
        inner = Quad([(1, 1), (2, 1), (2, 2), (1, 2)])
        outer = Quad([(0, 0), (3, 0), (3, 3), (0, 3)])
        assert polygon_iou(inner, outer) == pytest.approx(1 / 9, abs=1e-12)

    def test_non_convex_rejected(self):
        dart = Quad([(0, 0), (10, 0), (4, 4), (0, 10)])
        with pytest.raises(NonConvexInput):
            polygon_iou(dart, SQUARE)

    def test_symmetry_and_self(self, rng):
        for _ in range(200):
            a = random_star_quad(rng, convex=True)
            b = random_star_quad(rng, convex=True)
            assert polygon_iou(a, a) == pytest.approx(1.0, abs=1e-12)
            assert abs(polygon_iou(a, b) - polygon_iou(b, a)) <= 1e-12
            assert 0.0 <= polygon_iou(a, b) <= 1.0

    def test_monte_carlo_small(self, rng):
        done = 0
        while done < 5:
            a = random_star_quad(rng, convex=True)
            try:
                b = Quad(a.vertices + rng.uniform(-8, 8, (4, 2)))
            except DegenerateQuad:
                continue
            if not b.is_convex():
                continue
            done += 1
            mc = monte_carlo_iou(a.vertices, b.vertices, 200_000, seed=done)
            assert polygon_iou(a, b) == pytest.approx(mc, abs=0.01)


class TestMinAreaRect:
    def test_axis_aligned_rect_is_its_own_min_rect(self):
        r = min_area_rect([(0, 0), (4, 0), (4, 2), (0, 2)])
        np.testing.assert_allclose(r.vertices, RECT.vertices, atol=1e-12)

    def test_rotated_square(self):
        pts = [(1, 0), (2, 1), (1, 2), (0, 1)]
        r = min_area_rect(pts)
        assert r.area == pytest.approx(2.0, abs=1e-12)
        assert Box.around(pts).width * Box.around(pts).height == 4.0

    def test_two_points(self):
        with pytest.raises(DegenerateInput):
            min_area_rect([(0, 0), (1, 1)])

    def test_collinear(self):
        with pytest.raises(DegenerateInput):
            min_area_rect([(0, 0), (1, 1), (2, 2), (3, 3)])

    def test_containment_and_area_bound(self, rng):
        for _ in range(100):
            pts = rng.normal(0, 1, (rng.integers(3, 60), 2)) * rng.uniform(0.5, 20, 2)
            r = min_area_rect(pts)
            bb = Box.around(pts)
            assert r.area <= bb.width * bb.height + 1e-9
            # grow by 1e-6 along each edge's outward normal to absorb rounding
            v = r.vertices
            c = v.mean(axis=0)
            grown = c + (v - c) * (1 + 1e-6 / np.linalg.norm(v - c, axis=1, keepdims=True))
            assert inside_convex(grown, pts).all()

    def test_brute_force_angle_scan(self, rng):
        # a fine angle scan never beats the caliper answer
        for _ in range(20):
            pts = rng.normal(0, 1, (30, 2)) * [10, 3]
            best = min_area_rect(pts).area
            for t in np.linspace(0, np.pi / 2, 2000):
                u = np.array([np.cos(t), np.sin(t)])
                w = np.array([-u[1], u[0]])
                area = np.ptp(pts @ u) * np.ptp(pts @ w)
                assert area >= best - 1e-9


def test_convex_hull_drops_interior_and_collinear():
    pts = [(0, 0), (1, 0), (2, 0), (2, 2), (0, 2), (1, 1)]
    hull = convex_hull(pts)
    assert len(hull) == 4
    assert {tuple(p) for p in hull} == {(0, 0), (2, 0), (2, 2), (0, 2)}
