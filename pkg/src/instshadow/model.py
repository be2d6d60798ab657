"""Ground-truth datasets, prediction files and dataset statistics.

Ground truth follows the three-mask labelling scheme: every pair stores a
shadow mask and a shadow-object association mask, and the object mask is
always derived as association minus shadow. Object masks are never read
from or written to disk.

Ground-truth file::

    {"format_version": 1,
     "images": [{"id", "width", "height"}],
     "pairs": [{"image_id", "pair_id", "shadow_rle": [...], "association_rle": [...]}]}

Prediction file::

    {"format_version": 1,
     "instances": [{"id", "image_id", "kind", "score", "box", "rle"}],
     "associations": [{"id", "image_id", "score", "box", "light_angle"}]}

Instance ``rle`` is optional and, since prediction files carry no image
table, self-describing: ``{"size": [height, width], "counts": [...]}``.
Detection ``id`` is optional on input; missing ids default to the position
in their list.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Hashable, List, Optional, Tuple

from . import mask as masklib
from ._io import FORMAT_VERSION, read_json, write_json
from .geometry import BBox, merge
from .mask import Mask

KINDS = ("shadow", "object")
AREA_BINS = 10
AREA_BIN_WIDTH = 0.05
MANY_PAIRS = 9


class ValidationError(ValueError):
    """Input data violates the data model."""


@dataclass(frozen=True)
class ImageInfo:
    id: Hashable
    width: int
    height: int

    def __post_init__(self):
        if int(self.width) <= 0 or int(self.height) <= 0:
            raise ValidationError(f"image {self.id!r}: dimensions must be positive")


@dataclass(frozen=True)
class GroundTruthPair:
    """One labelled shadow-object pair; object mask and all boxes are derived."""

    image_id: Hashable
    pair_id: Hashable
    shadow_mask: Mask
    association_mask: Mask
    object_mask: Mask = field(init=False, repr=False)
    shadow_box: BBox = field(init=False)
    object_box: BBox = field(init=False)
    association_box: BBox = field(init=False)

    def __post_init__(self):
        where = f"image {self.image_id!r} pair {self.pair_id!r}"
        if self.shadow_mask.shape != self.association_mask.shape:
            raise ValidationError(f"{where}: shadow and association masks differ in size")
        if self.shadow_mask.is_empty():
            raise ValidationError(f"{where}: empty shadow mask")
        if not masklib.is_subset(self.shadow_mask, self.association_mask):
            raise ValidationError(f"{where}: shadow mask is not contained in the association mask")
        obj = masklib.subtract(self.association_mask, self.shadow_mask)
        if obj.is_empty():
            raise ValidationError(f"{where}: derived object mask is empty")
        shadow_box = masklib.bbox_of(self.shadow_mask)
        object_box = masklib.bbox_of(obj)
        object.__setattr__(self, "object_mask", obj)
        object.__setattr__(self, "shadow_box", shadow_box)
        object.__setattr__(self, "object_box", object_box)
        object.__setattr__(self, "association_box", merge(shadow_box, object_box))


@dataclass
class GroundTruthDataset:
    images: Dict[Hashable, ImageInfo]
    pairs: Dict[Hashable, List[GroundTruthPair]]

    def __post_init__(self):
        for image_id in self.images:
            self.pairs.setdefault(image_id, [])
        unknown = set(self.pairs) - set(self.images)
        if unknown:
            raise ValidationError(f"pairs reference unknown images: {sorted(map(str, unknown))}")

    @property
    def num_images(self) -> int:
        return len(self.images)

    @property
    def num_pairs(self) -> int:
        return sum(len(p) for p in self.pairs.values())

    def all_pairs(self) -> List[GroundTruthPair]:
        return [p for image_id in self.images for p in self.pairs[image_id]]

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "images": [
                {"id": info.id, "width": info.width, "height": info.height}
                for info in self.images.values()
            ],
            "pairs": [
                {
                    "image_id": p.image_id,
                    "pair_id": p.pair_id,
                    "shadow_rle": p.shadow_mask.to_json(),
                    "association_rle": p.association_mask.to_json(),
                }
                for p in self.all_pairs()
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GroundTruthDataset":
        if not isinstance(data, dict) or "images" not in data:
            raise ValidationError("ground truth must be an object with an 'images' list")
        images: Dict[Hashable, ImageInfo] = {}
        for entry in data["images"]:
            try:
                info = ImageInfo(entry["id"], int(entry["width"]), int(entry["height"]))
            except (KeyError, TypeError) as exc:
                raise ValidationError(f"malformed image entry {entry!r}: {exc}") from None
            if info.id in images:
                raise ValidationError(f"duplicate image id {info.id!r}")
            images[info.id] = info
        pairs: Dict[Hashable, List[GroundTruthPair]] = {k: [] for k in images}
        seen = set()
        for entry in data.get("pairs", []):
            try:
                image_id, pair_id = entry["image_id"], entry["pair_id"]
                shadow_counts, assoc_counts = entry["shadow_rle"], entry["association_rle"]
            except (KeyError, TypeError) as exc:
                raise ValidationError(f"malformed pair entry: missing {exc}") from None
            where = f"image {image_id!r} pair {pair_id!r}"
            if image_id not in images:
                raise ValidationError(f"{where}: unknown image id")
            if (image_id, pair_id) in seen:
                raise ValidationError(f"{where}: duplicate pair id")
            seen.add((image_id, pair_id))
            info = images[image_id]
            try:
                shadow = Mask(info.width, info.height, tuple(shadow_counts))
                assoc = Mask(info.width, info.height, tuple(assoc_counts))
            except (ValueError, TypeError) as exc:
                raise ValidationError(f"{where}: bad RLE ({exc})") from None
            pairs[image_id].append(GroundTruthPair(image_id, pair_id, shadow, assoc))
        return cls(images, pairs)


def load_ground_truth(path) -> GroundTruthDataset:
    data = read_json(path)
    try:
        return GroundTruthDataset.from_dict(data)
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None


def save_ground_truth(dataset: GroundTruthDataset, path) -> None:
    write_json(path, dataset.to_dict())


# -- predictions ------------------------------------------------------------


def _check_score(score: float, what: str) -> None:
    if not (0.0 <= score <= 1.0):
        raise ValidationError(f"{what}: score {score!r} outside [0, 1]")


@dataclass(frozen=True)
class InstanceDetection:
    image_id: Hashable
    kind: str
    score: float
    box: BBox
    mask: Optional[Mask] = None
    id: Optional[int] = None

    def __post_init__(self):
        what = f"{self.kind} detection {self.id!r} in image {self.image_id!r}"
        if self.kind not in KINDS:
            raise ValidationError(f"unknown instance kind {self.kind!r}")
        _check_score(self.score, what)
        if self.mask is not None and not self.mask.is_empty():
            if not self.box.expand(1.0).contains(masklib.bbox_of(self.mask)):
                raise ValidationError(f"{what}: mask extends beyond its box")

    def to_dict(self) -> dict:
        out = {
            "id": self.id,
            "image_id": self.image_id,
            "kind": self.kind,
            "score": self.score,
            "box": self.box.as_list(),
        }
        if self.mask is not None:
            out["rle"] = {"size": [self.mask.height, self.mask.width], "counts": self.mask.to_json()}
        return out

    @classmethod
    def from_dict(cls, entry: dict, default_id: Optional[int] = None) -> "InstanceDetection":
        try:
            mask = None
            if entry.get("rle") is not None:
                rle = entry["rle"]
                height, width = rle["size"]
                mask = Mask(int(width), int(height), tuple(rle["counts"]))
            return cls(
                image_id=entry["image_id"],
                kind=entry["kind"],
                score=float(entry["score"]),
                box=BBox.from_list(entry["box"]),
                mask=mask,
                id=entry.get("id", default_id),
            )
        except ValidationError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed instance entry {default_id}: {exc!r}") from None


def in_principal_range(theta: float) -> bool:
    return -math.pi < theta <= math.pi


@dataclass(frozen=True)
class AssociationDetection:
    image_id: Hashable
    score: float
    box: BBox
    light_angle: float
    id: Optional[int] = None

    def __post_init__(self):
        what = f"association {self.id!r} in image {self.image_id!r}"
        _check_score(self.score, what)
        if not in_principal_range(self.light_angle):
            raise ValidationError(f"{what}: light angle {self.light_angle!r} outside (-pi, pi]")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "image_id": self.image_id,
            "score": self.score,
            "box": self.box.as_list(),
            "light_angle": self.light_angle,
        }

    @classmethod
    def from_dict(cls, entry: dict, default_id: Optional[int] = None) -> "AssociationDetection":
        try:
            return cls(
                image_id=entry["image_id"],
                score=float(entry["score"]),
                box=BBox.from_list(entry["box"]),
                light_angle=float(entry["light_angle"]),
                id=entry.get("id", default_id),
            )
        except ValidationError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed association entry {default_id}: {exc!r}") from None


@dataclass
class Predictions:
    instances: List[InstanceDetection] = field(default_factory=list)
    associations: List[AssociationDetection] = field(default_factory=list)

    def image_ids(self) -> List[Hashable]:
        seen = {}
        for det in [*self.instances, *self.associations]:
            seen.setdefault(det.image_id, None)
        return list(seen)

    def by_image(self) -> Dict[Hashable, Tuple[list, list, list]]:
        """Group into ``image_id -> (shadows, objects, associations)``."""
        groups: Dict[Hashable, Tuple[list, list, list]] = {}
        for image_id in self.image_ids():
            groups[image_id] = ([], [], [])
        for det in self.instances:
            groups[det.image_id][0 if det.kind == "shadow" else 1].append(det)
        for det in self.associations:
            groups[det.image_id][2].append(det)
        return groups

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "instances": [d.to_dict() for d in self.instances],
            "associations": [d.to_dict() for d in self.associations],
        }

    @classmethod
    def from_dict(cls, data: Optional[dict]) -> "Predictions":
        if data is None:
            return cls()
        if not isinstance(data, dict):
            raise ValidationError("predictions must be a JSON object")
        instances = [
            InstanceDetection.from_dict(e, i) for i, e in enumerate(data.get("instances", []))
        ]
        associations = [
            AssociationDetection.from_dict(e, i) for i, e in enumerate(data.get("associations", []))
        ]
        for label, dets in (("instance", instances), ("association", associations)):
            ids = Counter(d.id for d in dets)
            dup = [k for k, n in ids.items() if n > 1]
            if dup:
                raise ValidationError(f"duplicate {label} ids: {dup[:5]}")
        return cls(instances, associations)


def load_predictions(path) -> Predictions:
    try:
        return Predictions.from_dict(read_json(path))
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None


def save_predictions(predictions: Predictions, path) -> None:
    write_json(path, predictions.to_dict())


# -- statistics ---------------------------------------------------------------


@dataclass(frozen=True)
class DatasetStats:
    """Counts and histograms describing a ground-truth dataset.

    Area histograms hold the fraction of the image covered by each instance:
    ten bins of width 0.05 over [0, 0.5) followed by one overflow bin.
    """

    num_images: int
    num_pairs: int
    pairs_per_image: Dict[int, int]
    mean_pairs_per_image: float
    shadow_area_hist: Tuple[int, ...]
    object_area_hist: Tuple[int, ...]
    frac_images_many_pairs: float

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "num_images": self.num_images,
            "num_pairs": self.num_pairs,
            "pairs_per_image": {str(k): v for k, v in sorted(self.pairs_per_image.items())},
            "mean_pairs_per_image": self.mean_pairs_per_image,
            "area_bin_edges": [round(i * AREA_BIN_WIDTH, 2) for i in range(AREA_BINS + 1)],
            "shadow_area_hist": list(self.shadow_area_hist),
            "object_area_hist": list(self.object_area_hist),
            "frac_images_9_or_more_pairs": self.frac_images_many_pairs,
        }


def _area_bin(pixels: int, image_pixels: int) -> int:
    # integer arithmetic keeps bin edges exact
    return min(int(pixels * round(1 / AREA_BIN_WIDTH)) // image_pixels, AREA_BINS)


def compute_stats(dataset: GroundTruthDataset) -> DatasetStats:
    if dataset.num_images == 0:
        raise ValidationError("cannot compute statistics of an empty dataset")
    per_image = Counter(len(dataset.pairs[i]) for i in dataset.images)
    shadow_hist = [0] * (AREA_BINS + 1)
    object_hist = [0] * (AREA_BINS + 1)
    for image_id, info in dataset.images.items():
        n = info.width * info.height
        for p in dataset.pairs[image_id]:
            shadow_hist[_area_bin(masklib.area(p.shadow_mask), n)] += 1
            object_hist[_area_bin(masklib.area(p.object_mask), n)] += 1
    many = sum(v for k, v in per_image.items() if k >= MANY_PAIRS)
    return DatasetStats(
        num_images=dataset.num_images,
        num_pairs=dataset.num_pairs,
        pairs_per_image=dict(sorted(per_image.items())),
        mean_pairs_per_image=dataset.num_pairs / dataset.num_images,
        shadow_area_hist=tuple(shadow_hist),
        object_area_hist=tuple(object_hist),
        frac_images_many_pairs=many / dataset.num_images,
    )
