import json
import math
from pathlib import Path

import numpy as np
import pytest

from instshadow import mask as M
from instshadow.geometry import BBox
from instshadow.mask import Mask
from instshadow.model import (
    AssociationDetection,
    GroundTruthDataset,
    GroundTruthPair,
    ImageInfo,
    InstanceDetection,
    Predictions,
    ValidationError,
    compute_stats,
    load_ground_truth,
    load_predictions,
    save_ground_truth,
    save_predictions,
)

DATA = Path(__file__).parent / "data"


def _write(tmp_path, obj, name="f.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return p


class TestGroundTruth:
    def test_golden_fixture(self):
        ds = load_ground_truth(DATA / "gt_golden.json")
        assert ds.num_images == 1 and ds.num_pairs == 2
        p0, p1 = ds.pairs[1]
        assert p0.shadow_box == BBox(0, 1, 1, 3)
        assert p0.object_box == BBox(1, 1, 2, 3)
        assert p0.association_box == BBox(0, 1, 2, 3)
        assert p1.shadow_box == BBox(3, 2, 4, 3)
        assert p1.object_box == BBox(3, 0, 4, 2)
        assert p1.association_box == BBox(3, 0, 4, 3)
        np.testing.assert_array_equal(
            M.decode(p1.object_mask)[:, 3], [True, True, False]
        )

    def test_object_mask_is_derived(self):
        ds = load_ground_truth(DATA / "gt_golden.json")
        for p in ds.all_pairs():
            assert p.object_mask == M.subtract(p.association_mask, p.shadow_mask)
            assert M.union(p.shadow_mask, p.object_mask) == p.association_mask
            assert p.association_box.contains(p.shadow_box)
            assert p.association_box.contains(p.object_box)

    def test_shadow_outside_association_names_pair(self, tmp_path):
        data = json.loads((DATA / "gt_golden.json").read_text())
        data["pairs"][1]["shadow_rle"] = [0, 1, 11]
        with pytest.raises(ValidationError, match=r"image 1 pair 1.*not contained"):
            load_ground_truth(_write(tmp_path, data))

    def test_empty_object_rejected(self, tmp_path):
        data = json.loads((DATA / "gt_golden.json").read_text())
        data["pairs"][0]["association_rle"] = [1, 2, 9]
        with pytest.raises(ValidationError, match="object mask is empty"):
            load_ground_truth(_write(tmp_path, data))

    def test_bad_counts_rejected(self, tmp_path):
        data = json.loads((DATA / "gt_golden.json").read_text())
        data["pairs"][0]["shadow_rle"] = [1, 2, 8]
        with pytest.raises(ValidationError, match="pair 0"):
            load_ground_truth(_write(tmp_path, data))

    def test_unknown_image_and_duplicates(self, tmp_path):
        data = json.loads((DATA / "gt_golden.json").read_text())
        data["pairs"][0]["image_id"] = 9
        with pytest.raises(ValidationError, match="unknown image"):
            load_ground_truth(_write(tmp_path, data))
        data = json.loads((DATA / "gt_golden.json").read_text())
        data["pairs"][1]["pair_id"] = 0
        with pytest.raises(ValidationError, match="duplicate pair"):
            load_ground_truth(_write(tmp_path, data))

    def test_parse_failure(self, tmp_path):
        p = tmp_path / "broken.json"
        p.write_text("{not json")
        with pytest.raises(ValueError, match="invalid JSON"):
            load_ground_truth(p)

    def test_round_trip(self, tmp_path):
        ds = load_ground_truth(DATA / "gt_golden.json")
        save_ground_truth(ds, tmp_path / "out.json")
        again = load_ground_truth(tmp_path / "out.json")
        assert again.images == ds.images
        assert again.pairs == ds.pairs
        assert (tmp_path / "out.json").read_text() == json.dumps(ds.to_dict(), indent=1) + "\n"


def _predictions():
    m = Mask.from_box(BBox(1, 1, 3, 4), 6, 5)
    return Predictions(
        instances=[
            InstanceDetection(0, "shadow", 0.123456789012345, BBox(1, 1, 3, 4), m, 0),
            InstanceDetection(0, "object", 0.5, BBox(0.25, 0.5, 2.75, 3.125), None, 1),
            InstanceDetection("b", "object", 1.0, BBox(0, 0, 1, 1), None, 2),
        ],
        associations=[
            AssociationDetection(0, 0.75, BBox(0, 0, 4, 4), math.pi, 0),
            AssociationDetection("b", 0.1, BBox(0, 0, 2, 2), -3.0, 1),
        ],
    )


class TestPredictions:
    def test_round_trip_is_identity(self, tmp_path):
        preds = _predictions()
        save_predictions(preds, tmp_path / "p.json")
        assert load_predictions(tmp_path / "p.json") == preds

    def test_empty_file(self, tmp_path):
        p = tmp_path / "empty.json"
        p.write_text("")
        preds = load_predictions(p)
        assert preds.instances == [] and preds.associations == []
        assert load_predictions(_write(tmp_path, {}, "b.json")).by_image() == {}

    def test_unknown_kind(self, tmp_path):
        data = {"instances": [{"image_id": 0, "kind": "tree", "score": 0.5, "box": [0, 0, 1, 1]}]}
        with pytest.raises(ValidationError, match="kind"):
            load_predictions(_write(tmp_path, data))

    @pytest.mark.parametrize("score", [-0.1, 1.01])
    def test_score_out_of_range_is_error(self, tmp_path, score):
        data = {"instances": [{"image_id": 0, "kind": "shadow", "score": score, "box": [0, 0, 1, 1]}]}
        with pytest.raises(ValidationError, match="score"):
            load_predictions(_write(tmp_path, data))

    def test_angle_out_of_range(self):
        with pytest.raises(ValidationError, match="angle"):
            AssociationDetection(0, 0.5, BBox(0, 0, 1, 1), -math.pi)

    def test_missing_ids_default_to_position(self, tmp_path):
        data = {
            "instances": [
                {"image_id": 0, "kind": "shadow", "score": 0.5, "box": [0, 0, 1, 1]},
                {"image_id": 0, "kind": "object", "score": 0.5, "box": [0, 0, 1, 1]},
            ],
            "associations": [{"image_id": 0, "score": 0.5, "box": [0, 0, 1, 1], "light_angle": 0.0}],
        }
        preds = load_predictions(_write(tmp_path, data))
        assert [d.id for d in preds.instances] == [0, 1]
        assert preds.associations[0].id == 0

    def test_duplicate_ids(self, tmp_path):
        inst = {"id": 3, "image_id": 0, "kind": "shadow", "score": 0.5, "box": [0, 0, 1, 1]}
        with pytest.raises(ValidationError, match="duplicate"):
            load_predictions(_write(tmp_path, {"instances": [inst, inst]}))

    def test_mask_outside_box(self):
        m = Mask.from_box(BBox(0, 0, 5, 5), 6, 6)
        with pytest.raises(ValidationError, match="beyond"):
            InstanceDetection(0, "shadow", 0.5, BBox(0, 0, 2, 2), m)
        # one pixel of slack is tolerated
        InstanceDetection(0, "shadow", 0.5, BBox(0.5, 0.5, 4.5, 4.5), m)

    def test_by_image(self):
        groups = _predictions().by_image()
        shadows, objects, assocs = groups[0]
        assert [d.id for d in shadows] == [0] and [d.id for d in objects] == [1]
        assert [d.id for d in assocs] == [0]
        assert [d.id for d in groups["b"][1]] == [2]


def _tiny_dataset(pairs_per_image):
    """Images of 2x1 pixels; each pair is shadow on the left, object on the right."""
    shadow = Mask(2, 1, (0, 1, 1))
    assoc = Mask(2, 1, (0, 2))
    images, pairs = {}, {}
    for i, n in enumerate(pairs_per_image):
        images[i] = ImageInfo(i, 2, 1)
        pairs[i] = [GroundTruthPair(i, k, shadow, assoc) for k in range(n)]
    return GroundTruthDataset(images, pairs)


class TestStats:
    def test_single_pair(self):
        s = compute_stats(_tiny_dataset([1]))
        assert s.mean_pairs_per_image == 1.0
        assert s.pairs_per_image == {1: 1}
        # each instance covers half of the image: overflow bin
        assert s.shadow_area_hist == (0,) * 10 + (1,)

    def test_thousand_image_totals(self):
        counts = [4] * 623 + [3] * 377
        assert sum(counts) == 3623
        s = compute_stats(_tiny_dataset(counts))
        assert s.num_images == 1000 and s.num_pairs == 3623
        assert s.mean_pairs_per_image == pytest.approx(3.623, abs=1e-12)
        assert round(s.mean_pairs_per_image, 2) == 3.62

    def test_histogram_totals(self):
        s = compute_stats(_tiny_dataset([0, 2, 9, 11]))
        assert sum(s.pairs_per_image.values()) == s.num_images
        assert sum(k * v for k, v in s.pairs_per_image.items()) == s.num_pairs
        assert sum(s.shadow_area_hist) == s.num_pairs == sum(s.object_area_hist)
        assert s.frac_images_many_pairs == 0.5

    def test_area_bin_edges_exact(self):
        # 1 of 20 pixels is exactly 0.05: lands in the second bin
        shadow = Mask(20, 1, (0, 1, 19))
        assoc = Mask(20, 1, (0, 3, 17))
        ds = GroundTruthDataset({0: ImageInfo(0, 20, 1)}, {0: [GroundTruthPair(0, 0, shadow, assoc)]})
        s = compute_stats(ds)
        assert s.shadow_area_hist[1] == 1
        assert s.object_area_hist[2] == 1

    def test_empty_dataset(self):
        with pytest.raises(ValidationError):
            compute_stats(GroundTruthDataset({}, {}))
