import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import make_paired
from instshadow import mask as M
from instshadow.geometry import BBox, center
from instshadow.light import (
    circular_mean,
    estimate_image_direction,
    estimate_pair_direction,
    ground_truth_angle,
    light_loss,
    project_shadow,
    rasterize_polygon,
    shadow_polygon,
    wrap_angle,
)

angles = st.floats(-50, 50, allow_nan=False)


class TestWrap:
    @pytest.mark.parametrize(
        "theta, expected",
        [(0.0, 0.0), (math.pi, math.pi), (-math.pi, math.pi), (3 * math.pi, math.pi), (2 * math.pi, 0.0)],
    )
    def test_examples(self, theta, expected):
        assert wrap_angle(theta) == pytest.approx(expected, abs=1e-12)

    @given(angles)
    def test_principal_range(self, theta):
        w = wrap_angle(theta)
        assert -math.pi < w <= math.pi
        assert math.cos(w) == pytest.approx(math.cos(theta), abs=1e-9)
        assert math.sin(w) == pytest.approx(math.sin(theta), abs=1e-9)

    def test_tiny_negative(self):
        assert wrap_angle(-1e-300) > -math.pi

    def test_vectorized(self):
        out = wrap_angle(np.array([0.0, 4.0, -4.0]))
        np.testing.assert_allclose(out, [0.0, 4.0 - 2 * math.pi, 2 * math.pi - 4.0])


class TestLoss:
    def test_quadratic_branch(self):
        assert light_loss(0.5, 0.0) == pytest.approx(0.125, abs=1e-15)

    def test_linear_branch(self):
        assert light_loss(2.0, 0.0) == pytest.approx(1.5, abs=1e-15)

    def test_continuous_at_one(self):
        assert light_loss(1.0, 0.0) == 0.5
        assert light_loss(1.0 - 1e-12, 0.0) == pytest.approx(0.5, abs=1e-11)

    def test_wrap_across_the_cut(self):
        d = 2 * math.pi - 6
        assert light_loss(-3.0, 3.0) == pytest.approx(0.5 * d * d, abs=1e-12)
        assert light_loss(-3.0, 3.0) == pytest.approx(0.0401, abs=1e-4)
        assert light_loss(-3.0, 3.0, wrap=False) == pytest.approx(5.5, abs=1e-12)

    @given(angles, angles)
    def test_full_turn_invariance(self, p, g):
        base = light_loss(p, g)
        assert light_loss(p + 2 * math.pi, g) == pytest.approx(base, abs=1e-9)
        assert light_loss(p, g - 2 * math.pi) == pytest.approx(base, abs=1e-9)

    @given(angles, angles)
    def test_symmetric_and_bounded(self, p, g):
        assert light_loss(p, g) == pytest.approx(light_loss(g, p), abs=1e-9)
        assert 0.0 <= light_loss(p, g) <= math.pi - 0.5 + 1e-12

    def test_arrays(self):
        out = light_loss(np.array([0.5, 2.0]), np.zeros(2))
        np.testing.assert_allclose(out, [0.125, 1.5])


class TestAngles:
    def test_ground_truth_angle(self):
        assert ground_truth_angle((0, 0), (1, 0)) == 0.0
        assert ground_truth_angle((0, 0), (0, 1)) == pytest.approx(math.pi / 2)
        assert ground_truth_angle((1, 0), (0, 0)) == math.pi
        assert ground_truth_angle((1, -0.0), (0, -0.0)) == math.pi

    def test_coincident_centroids(self):
        with pytest.raises(ValueError, match="coincident"):
            ground_truth_angle((2, 3), (2, 3))

    def test_pair_direction_uses_box_centers(self):
        p = make_paired((0, 0, 2, 2), (4, 0, 6, 2))
        assert estimate_pair_direction(p) == 0.0
        p = make_paired((0, 4, 2, 6), (0, 0, 2, 2))
        assert estimate_pair_direction(p) == pytest.approx(-math.pi / 2)

    def test_circular_mean(self):
        assert circular_mean([math.pi / 2, 0.0]) == pytest.approx(math.pi / 4, abs=1e-12)
        # the arithmetic mean of these is 0, the circular one is pi
        assert abs(circular_mean([3.0, -3.0])) == pytest.approx(math.pi, abs=1e-12)
        assert circular_mean([0.0, 1.0], [0.0, 2.0]) == pytest.approx(1.0)

    def test_circular_mean_errors(self):
        with pytest.raises(ValueError):
            circular_mean([])
        with pytest.raises(ValueError, match="zero"):
            circular_mean([1.0], [0.0])
        with pytest.raises(ValueError, match="cancel"):
            circular_mean([0.0, math.pi])

    def test_image_direction_weights_scores(self):
        a = make_paired((0, 0, 2, 2), (4, 0, 6, 2), score=0.9)
        b = make_paired((0, 4, 2, 6), (0, 0, 2, 2), score=0.1)
        est = estimate_image_direction([a, b])
        assert -math.pi / 4 < est < 0
        with pytest.raises(ValueError):
            estimate_image_direction([])


class TestProjection:
    def test_light_from_east_extrudes_west(self):
        fp = BBox(40, 20, 50, 30)
        m = project_shadow(fp, 10, 0.0, 1.0, 80, 60)
        assert M.bbox_of(m) == BBox(30, 20, 40, 30)
        assert M.area(m) == 100

    def test_scale_zero_rejected(self):
        with pytest.raises(ValueError):
            project_shadow(BBox(0, 0, 4, 4), 10, 0.0, 0.0, 32, 32)
        with pytest.raises(ValueError):
            shadow_polygon(BBox(0, 0, 0, 4), 10, 0.0, 1.0)

    @given(st.floats(-math.pi, math.pi, exclude_min=True), st.floats(0.8, 1.6))
    def test_centroid_lies_on_the_ray(self, theta, scale):
        fp = BBox(100, 100, 124, 120)
        poly = shadow_polygon(fp, 30, theta, scale)
        cx, cy = poly.mean(axis=0)
        fx, fy = center(fp)
        assert abs(wrap_angle(ground_truth_angle((cx, cy), (fx, fy)) - theta)) < 1e-9

    def test_recovery_within_tolerance(self):
        rng = np.random.default_rng(0)
        worst = 0.0
        for _ in range(300):
            theta = float(rng.uniform(-math.pi, math.pi))
            w, h = rng.integers(16, 49, size=2)
            fp = BBox(200, 200, 200 + int(w), 200 + int(h))
            shadow = project_shadow(fp, float(rng.uniform(16, 48)), theta, float(rng.uniform(0.8, 1.6)), 512, 512)
            obj = M.Mask.from_box(fp, 512, 512)
            est = ground_truth_angle(M.centroid(shadow), M.centroid(obj))
            worst = max(worst, abs(wrap_angle(est - theta)))
        assert worst <= 0.05

    def test_disjoint_from_footprint(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            fp = BBox(60, 60, 60 + int(rng.integers(4, 30)), 60 + int(rng.integers(4, 30)))
            m = project_shadow(fp, 20, float(rng.uniform(-math.pi, math.pi)), 1.0, 160, 160)
            assert M.intersection_area(m, M.Mask.from_box(fp, 160, 160)) == 0

    def test_rasterize_winding_independent(self):
        square = np.array([[1, 1], [4, 1], [4, 3], [1, 3]], float)
        assert rasterize_polygon(square, 6, 5) == rasterize_polygon(square[::-1], 6, 5)
        assert M.area(rasterize_polygon(square, 6, 5)) == 6

    def test_rasterize_outside_image(self):
        assert rasterize_polygon(np.array([[-5, -5], [-1, -5], [-1, -1]], float), 4, 4).is_empty()
