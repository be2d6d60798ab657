import numpy as np
import pytest

from instshadow import mask as M
from instshadow.geometry import BBox, iou
from instshadow.mask import Mask


def _grid(*pixels, shape):
    g = np.zeros(shape, dtype=bool)
    for r, c in pixels:
        g[r, c] = True
    return g


class TestCodec:
    def test_all_zero(self):
        assert M.encode(np.zeros((2, 2))).counts == (4,)

    def test_all_one(self):
        assert M.encode(np.ones((2, 2))).counts == (0, 4)

    def test_column_major_single_pixel(self):
        # scan order is (0,0), (1,0), (0,1), (1,1): the pixel is third
        assert M.encode(_grid((0, 1), shape=(2, 2))).counts == (2, 1, 1)

    def test_decode_goldens(self):
        np.testing.assert_array_equal(M.decode(Mask(2, 2, (2, 1, 1))), _grid((0, 1), shape=(2, 2)))
        np.testing.assert_array_equal(M.decode(Mask(2, 2, (0, 4))), np.ones((2, 2), bool))

    def test_decode_shape_mismatch(self):
        with pytest.raises(ValueError, match="target"):
            M.decode(Mask(2, 3, (6,)), shape=(2, 3))

    def test_round_trip_random(self):
        rng = np.random.default_rng(0)
        for _ in range(500):
            h, w = rng.integers(1, 33, size=2)
            g = rng.random((h, w)) < rng.random()
            np.testing.assert_array_equal(M.decode(M.encode(g)), g)

    def test_invalid_counts(self):
        with pytest.raises(ValueError, match="sum"):
            Mask(2, 2, (3,))
        with pytest.raises(ValueError, match="first"):
            Mask(2, 2, (2, 0, 2))
        with pytest.raises(ValueError):
            Mask(2, 2, (-1, 5))
        with pytest.raises(ValueError):
            Mask(0, 2, ())

    def test_rejects_empty_grid(self):
        with pytest.raises(ValueError):
            M.encode(np.zeros((0, 3)))

    def test_encode_region_matches_full_encode(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            h, w = rng.integers(1, 9, size=2)
            sub = rng.random((h, w)) < 0.5
            x0, y0 = rng.integers(0, 4, size=2)
            W, H = w + x0 + int(rng.integers(0, 3)), h + y0 + int(rng.integers(0, 3))
            full = np.zeros((H, W), bool)
            full[y0 : y0 + h, x0 : x0 + w] = sub
            assert M.encode_region(sub, x0, y0, W, H) == M.encode(full)

    def test_from_box(self):
        m = Mask.from_box(BBox(1, 0, 3, 2), 4, 3)
        np.testing.assert_array_equal(M.decode(m), _grid((0, 1), (1, 1), (0, 2), (1, 2), shape=(3, 4)))


class TestSetOps:
    def setup_method(self):
        rng = np.random.default_rng(2)
        self.pairs = [
            (rng.random((7, 5)) < rng.random(), rng.random((7, 5)) < rng.random()) for _ in range(300)
        ]

    def test_match_numpy(self):
        for a, b in self.pairs:
            A, B = M.encode(a), M.encode(b)
            np.testing.assert_array_equal(M.decode(M.union(A, B)), a | b)
            np.testing.assert_array_equal(M.decode(M.intersection(A, B)), a & b)
            np.testing.assert_array_equal(M.decode(M.subtract(A, B)), a & ~b)
            assert M.area(A) == a.sum()

    def test_inclusion_exclusion(self):
        for a, b in self.pairs:
            A, B = M.encode(a), M.encode(b)
            assert M.area(M.union(A, B)) + M.area(M.intersection(A, B)) == M.area(A) + M.area(B)

    def test_subtract_removes_b(self):
        for a, b in self.pairs:
            A, B = M.encode(a), M.encode(b)
            assert M.intersection_area(M.subtract(M.union(A, B), B), B) == 0

    def test_identities(self):
        m = M.encode(_grid((0, 0), (1, 1), shape=(2, 3)))
        empty = Mask.empty(3, 2)
        assert M.subtract(m, m).is_empty()
        assert M.subtract(m, empty) == m
        assert M.union(m, empty) == m
        assert M.union(m, m) == m

    def test_disjoint_remainder(self):
        assoc = M.encode(np.ones((1, 2)))
        shadow = M.encode(np.array([[1, 0]]))
        np.testing.assert_array_equal(M.decode(M.subtract(assoc, shadow)), [[False, True]])

    def test_union_of_disjoint_pixels(self):
        a = M.encode(_grid((0, 0), shape=(2, 2)))
        b = M.encode(_grid((1, 1), shape=(2, 2)))
        assert M.area(M.union(a, b)) == 2

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            M.union(Mask.empty(2, 3), Mask.empty(3, 2))
        with pytest.raises(ValueError, match="mismatch"):
            M.mask_iou(Mask.empty(2, 3), Mask.empty(3, 3))


class TestIoU:
    def test_identical(self):
        m = M.encode(_grid((0, 1), shape=(2, 2)))
        assert M.mask_iou(m, m) == 1.0

    def test_disjoint(self):
        a = M.encode(_grid((0, 0), shape=(2, 2)))
        b = M.encode(_grid((1, 1), shape=(2, 2)))
        assert M.mask_iou(a, b) == 0.0

    def test_both_empty(self):
        assert M.mask_iou(Mask.empty(3, 3), Mask.empty(3, 3)) == 0.0

    def test_solid_rectangles_equal_box_iou(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            x = np.sort(rng.integers(0, 21, size=(2, 2)), axis=1)
            y = np.sort(rng.integers(0, 16, size=(2, 2)), axis=1)
            boxes = [BBox(x[i, 0], y[i, 0], x[i, 1], y[i, 1]) for i in range(2)]
            masks = [Mask.from_box(b, 20, 15) for b in boxes]
            assert M.mask_iou(*masks) == pytest.approx(iou(*boxes), abs=1e-12)


class TestMeasures:
    def test_single_pixel(self):
        m = M.encode(_grid((1, 2), shape=(3, 4)))
        assert M.bbox_of(m) == BBox(2, 1, 3, 2)
        assert M.area(m) == 1
        assert M.centroid(m) == (2.5, 1.5)

    def test_full_mask(self):
        m = M.encode(np.ones((3, 5)))
        assert M.area(m) == 15
        assert M.centroid(m) == (2.5, 1.5)
        assert M.bbox_of(m) == BBox(0, 0, 5, 3)

    def test_two_pixel_mean(self):
        m = M.encode(_grid((0, 0), (0, 2), shape=(1, 3)))
        assert M.centroid(m) == (1.5, 0.5)

    def test_bbox_matches_numpy(self):
        rng = np.random.default_rng(4)
        for _ in range(300):
            g = rng.random((6, 7)) < 0.2
            if not g.any():
                continue
            rows, cols = np.nonzero(g)
            expected = BBox.from_pixel_extent(cols.min(), rows.min(), cols.max(), rows.max())
            assert M.bbox_of(M.encode(g)) == expected

    def test_empty_errors(self):
        with pytest.raises(ValueError):
            M.bbox_of(Mask.empty(2, 2))
        with pytest.raises(ValueError):
            M.centroid(Mask.empty(2, 2))
