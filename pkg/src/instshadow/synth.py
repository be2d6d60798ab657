"""Seeded synthetic scenes with known shadow-object pairings.

Each image gets one light direction. Objects (posts, ellipses or boxes) are
placed on non-overlapping footprints and each casts a straight shadow away
from the light, built with :func:`instshadow.light.shadow_polygon`. The
generator emits

* a ground-truth dataset in the three-mask layout,
* a perfect prediction file (ground truth re-emitted with score 1),
* a noisy prediction file (jittered boxes, morphed masks, dropped and
  spurious detections, perturbed angles),
* a manifest recording the true pairings and light angle per image.

Randomness comes from ``numpy.random.default_rng(SeedSequence([seed,
image_id, stream]))`` with stream 0 for the scene, 1 for perturbations of
true detections and 2 for false positives. Images are therefore independent
and perturbations at different noise levels share the same underlying draws.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import ndimage

from . import mask as masklib
from ._io import FORMAT_VERSION, write_json
from .geometry import BBox, intersection_area, merge, shortest_distance
from .light import ground_truth_angle, rasterize_polygon, shadow_polygon, wrap_angle
from .mask import Mask, encode_region
from .model import (
    AssociationDetection,
    GroundTruthDataset,
    GroundTruthPair,
    ImageInfo,
    InstanceDetection,
    Predictions,
    in_principal_range,
)

SHAPES = ("post", "ellipse", "box")
PRNG_DOC = (
    "numpy.random.default_rng(SeedSequence([seed, image_id, stream])); "
    "stream 0 scene layout, 1 perturbation of true detections, 2 false positives"
)


class PlacementError(RuntimeError):
    """The scene spec is too dense to place every pair."""


@dataclass(frozen=True)
class NoiseModel:
    """Perturbations applied to the perfect predictions.

    ``box_jitter`` is the standard deviation (pixels) added to each box
    corner. ``mask_radius`` dilates (positive) or erodes (negative) instance
    masks. ``fp_rate`` is the expected number of spurious detections per
    true detection; ``fn_rate`` the probability of dropping each true one.
    """

    box_jitter: float = 0.0
    mask_radius: int = 0
    tp_score: Tuple[float, float] = (1.0, 1.0)
    fp_score: Tuple[float, float] = (0.05, 0.6)
    fp_rate: float = 0.0
    fn_rate: float = 0.0
    angle_noise: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "tp_score", tuple(self.tp_score))
        object.__setattr__(self, "fp_score", tuple(self.fp_score))
        if self.box_jitter < 0 or self.angle_noise < 0:
            raise ValueError("noise standard deviations must be non-negative")
        for name in ("fp_rate", "fn_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        for name in ("tp_score", "fp_score"):
            lo, hi = getattr(self, name)
            if not 0.0 <= lo <= hi <= 1.0:
                raise ValueError(f"{name} must be a range inside [0, 1]")

    @classmethod
    def moderate(cls) -> "NoiseModel":
        return cls(box_jitter=2.0, mask_radius=1, tp_score=(0.5, 1.0), fp_score=(0.05, 0.6),
                   fp_rate=0.1, fn_rate=0.05, angle_noise=0.1)


@dataclass(frozen=True)
class SceneSpec:
    seed: int = 0
    num_images: int = 50
    width: int = 512
    height: int = 512
    pairs: Tuple[int, int] = (1, 9)
    light_angle: Optional[float] = None
    shapes: Tuple[str, ...] = SHAPES
    object_size: Tuple[int, int] = (16, 48)
    length_scale: Tuple[float, float] = (0.8, 1.6)
    noise: NoiseModel = field(default_factory=NoiseModel)
    max_attempts: int = 100

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(int(v) for v in self.pairs))
        object.__setattr__(self, "shapes", tuple(self.shapes))
        object.__setattr__(self, "object_size", tuple(int(v) for v in self.object_size))
        object.__setattr__(self, "length_scale", tuple(float(v) for v in self.length_scale))
        if isinstance(self.noise, dict):
            object.__setattr__(self, "noise", NoiseModel(**self.noise))
        if self.num_images < 1 or self.width < 8 or self.height < 8:
            raise ValueError("need at least one image of at least 8x8 pixels")
        lo, hi = self.pairs
        if not 1 <= lo <= hi:
            raise ValueError("pair count range must satisfy 1 <= min <= max")
        if not self.shapes or any(s not in SHAPES for s in self.shapes):
            raise ValueError(f"shapes must be a non-empty subset of {SHAPES}")
        smin, smax = self.object_size
        if not 4 <= smin <= smax:
            raise ValueError("object size range must satisfy 4 <= min <= max")
        a, b = self.length_scale
        if not 0 < a <= b:
            raise ValueError("length scale range must satisfy 0 < min <= max")
        if self.light_angle is not None and not in_principal_range(self.light_angle):
            raise ValueError("light angle must lie in (-pi, pi]")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SceneSpec":
        data = dict(data)
        if "noise" in data:
            data["noise"] = NoiseModel(**data["noise"])
        return cls(**data)


@dataclass(frozen=True)
class _Placed:
    shape: str
    footprint: BBox
    object_height: float
    length_scale: float
    object_mask: Mask
    shadow_mask: Mask
    shadow_box: BBox
    object_box: BBox


@dataclass
class SynthResult:
    ground_truth: GroundTruthDataset
    perfect: Predictions
    noisy: Predictions
    manifest: dict

    def save(self, directory) -> Dict[str, Path]:
        directory = Path(directory)
        paths = {
            "gt": directory / "gt.json",
            "perfect": directory / "perfect.json",
            "noisy": directory / "noisy.json",
            "manifest": directory / "manifest.json",
        }
        write_json(paths["gt"], self.ground_truth.to_dict())
        write_json(paths["perfect"], self.perfect.to_dict())
        write_json(paths["noisy"], self.noisy.to_dict())
        write_json(paths["manifest"], self.manifest)
        return paths


def _rng(seed: int, image_id: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, image_id, stream]))


def _object_mask(shape: str, fp: BBox, width: int, height: int) -> Mask:
    if shape != "ellipse":
        return Mask.from_box(fp, width, height)
    x0, y0 = int(fp.x_min), int(fp.y_min)
    w, h = int(fp.width()), int(fp.height())
    xs = (np.arange(w) + 0.5 - w / 2) / (w / 2)
    ys = (np.arange(h) + 0.5 - h / 2) / (h / 2)
    inside = xs[None, :] ** 2 + ys[:, None] ** 2 <= 1.0
    return encode_region(inside, x0, y0, width, height)


def _footprint(rng, spec: SceneSpec, shape: str) -> Tuple[int, int]:
    smin, smax = spec.object_size
    h = int(rng.integers(smin, smax + 1))
    if shape == "post":
        w = max(3, int(round(h * rng.uniform(0.2, 0.35))))
    else:
        w = int(rng.integers(max(smin // 2, 4), smax + 1))
    return w, h


def _try_place(rng, spec: SceneSpec, theta: float, placed: List[_Placed]) -> Optional[_Placed]:
    W, H = spec.width, spec.height
    shape = spec.shapes[int(rng.integers(len(spec.shapes)))]
    w, h = _footprint(rng, spec, shape)
    scale = float(rng.uniform(*spec.length_scale))
    if w + 4 > W or h + 4 > H:
        return None
    x0 = int(rng.integers(2, W - w - 1))
    y0 = int(rng.integers(2, H - h - 1))
    fp = BBox(x0, y0, x0 + w, y0 + h)
    poly = shadow_polygon(fp, h, theta, scale)
    # shadows stay inside the image so clipping never truncates them
    if poly[:, 0].min() < 1 or poly[:, 1].min() < 1 or poly[:, 0].max() > W - 1 or poly[:, 1].max() > H - 1:
        return None
    for other in placed:
        if intersection_area(fp.expand(2), other.footprint) > 0:
            return None
    shadow = rasterize_polygon(poly, W, H)
    if shadow.is_empty():
        return None
    shadow_box = masklib.bbox_of(shadow)
    fp_mask = Mask.from_box(fp, W, H)
    for other in placed:
        if intersection_area(shadow_box, other.footprint) > 0:
            if masklib.intersection_area(shadow, Mask.from_box(other.footprint, W, H)) > 0:
                return None
        if intersection_area(other.shadow_box, fp) > 0:
            if masklib.intersection_area(other.shadow_mask, fp_mask) > 0:
                return None
    obj = _object_mask(shape, fp, W, H)
    object_box = masklib.bbox_of(obj)
    if masklib.intersection_area(shadow, obj) > 0:
        return None
    if not shortest_distance(shadow_box, object_box) < shadow_box.height():
        return None
    return _Placed(shape, fp, float(h), scale, obj, shadow, shadow_box, object_box)


def _unambiguous(placed: List[_Placed]) -> bool:
    """No wrong shadow/object combination merges to a true association box."""
    assoc = {merge(p.shadow_box, p.object_box) for p in placed}
    for i, p in enumerate(placed):
        for j, q in enumerate(placed):
            if i != j and merge(p.shadow_box, q.object_box) in assoc:
                return False
    return True


def _layout(spec: SceneSpec, image_id: int) -> Tuple[float, List[_Placed]]:
    rng = _rng(spec.seed, image_id, 0)
    if spec.light_angle is None:
        theta = wrap_angle(rng.uniform(-math.pi, math.pi))
    else:
        theta = spec.light_angle
    n = int(rng.integers(spec.pairs[0], spec.pairs[1] + 1))
    for _ in range(spec.max_attempts):
        placed: List[_Placed] = []
        for _ in range(n):
            for _ in range(spec.max_attempts):
                item = _try_place(rng, spec, theta, placed)
                if item is not None:
                    placed.append(item)
                    break
            else:
                break
        if len(placed) == n and _unambiguous(placed):
            return theta, placed
    raise PlacementError(
        f"image {image_id}: could not place {n} pairs on {spec.width}x{spec.height} "
        f"after {spec.max_attempts} attempts"
    )


def _jitter_box(box: BBox, z: np.ndarray, sigma: float, width: int, height: int) -> BBox:
    c = np.array(box.as_list()) + sigma * z
    x0, x1 = sorted(c[[0, 2]])
    y0, y1 = sorted(c[[1, 3]])
    if x1 - x0 < 1:
        mid = (x0 + x1) / 2
        x0, x1 = mid - 0.5, mid + 0.5
    if y1 - y0 < 1:
        mid = (y0 + y1) / 2
        y0, y1 = mid - 0.5, mid + 0.5
    x0, x1 = float(np.clip(x0, 0, width - 1)), float(np.clip(x1, 1, width))
    y0, y1 = float(np.clip(y0, 0, height - 1)), float(np.clip(y1, 1, height))
    return BBox(x0, y0, max(x1, x0 + 1), max(y1, y0 + 1))


def _morph(m: Mask, radius: int) -> Mask:
    if radius == 0:
        return m
    box = masklib.bbox_of(m)
    r = abs(radius)
    x0 = max(int(box.x_min) - r, 0)
    y0 = max(int(box.y_min) - r, 0)
    x1 = min(int(box.x_max) + r, m.width)
    y1 = min(int(box.y_max) + r, m.height)
    crop = masklib.decode(m)[y0:y1, x0:x1]
    op = ndimage.binary_dilation if radius > 0 else ndimage.binary_erosion
    out = op(crop, iterations=r, border_value=0)
    return encode_region(out, x0, y0, m.width, m.height)


def _noisy_instance(det: InstanceDetection, rng, noise: NoiseModel, W: int, H: int) -> Optional[InstanceDetection]:
    z = rng.standard_normal(4)
    u_drop, u_score = rng.random(2)
    if u_drop < noise.fn_rate:
        return None
    box = _jitter_box(det.box, z, noise.box_jitter, W, H)
    m = masklib.intersection(_morph(det.mask, noise.mask_radius), Mask.from_box(box, W, H))
    if m.is_empty():
        m = Mask.from_box(box, W, H)
    lo, hi = noise.tp_score
    return replace(det, score=float(lo + (hi - lo) * u_score), box=box, mask=m)


def _noisy_association(det: AssociationDetection, rng, noise: NoiseModel, W: int, H: int) -> Optional[AssociationDetection]:
    z = rng.standard_normal(4)
    u_drop, u_score = rng.random(2)
    dz = rng.standard_normal()
    if u_drop < noise.fn_rate:
        return None
    angle = det.light_angle + noise.angle_noise * dz
    if not in_principal_range(angle):
        angle = wrap_angle(angle)
    lo, hi = noise.tp_score
    return replace(
        det,
        score=float(lo + (hi - lo) * u_score),
        box=_jitter_box(det.box, z, noise.box_jitter, W, H),
        light_angle=float(angle),
    )


def _random_box(rng, spec: SceneSpec) -> BBox:
    smin, smax = spec.object_size
    w = int(rng.integers(smin, 2 * smax + 1))
    h = int(rng.integers(smin, 2 * smax + 1))
    w, h = min(w, spec.width - 1), min(h, spec.height - 1)
    x0 = int(rng.integers(0, spec.width - w + 1))
    y0 = int(rng.integers(0, spec.height - h + 1))
    return BBox(x0, y0, x0 + w, y0 + h)


def _false_positives(spec: SceneSpec, image_id: int, n_true: int):
    noise = spec.noise
    rng = _rng(spec.seed, image_id, 2)
    lo, hi = noise.fp_score
    count = int(rng.poisson(noise.fp_rate * n_true)) if noise.fp_rate > 0 else 0
    instances, associations = [], []
    for _ in range(count):
        what = int(rng.integers(3))
        box = _random_box(rng, spec)
        score = float(lo + (hi - lo) * rng.random())
        if what < 2:
            kind = "shadow" if what == 0 else "object"
            instances.append(
                InstanceDetection(image_id, kind, score, box, Mask.from_box(box, spec.width, spec.height))
            )
        else:
            angle = wrap_angle(rng.uniform(-math.pi, math.pi))
            associations.append(AssociationDetection(image_id, score, box, angle))
    return instances, associations


def _image(spec: SceneSpec, image_id: int):
    W, H = spec.width, spec.height
    theta, placed = _layout(spec, image_id)
    gt_pairs, true_instances, true_assocs, records = [], [], [], []
    for k, p in enumerate(placed):
        assoc_mask = masklib.union(p.shadow_mask, p.object_mask)
        gt = GroundTruthPair(image_id, k, p.shadow_mask, assoc_mask)
        gt_pairs.append(gt)
        centroid_angle = ground_truth_angle(masklib.centroid(gt.shadow_mask), masklib.centroid(gt.object_mask))
        true_instances.append(InstanceDetection(image_id, "shadow", 1.0, gt.shadow_box, gt.shadow_mask))
        true_instances.append(InstanceDetection(image_id, "object", 1.0, gt.object_box, gt.object_mask))
        true_assocs.append(AssociationDetection(image_id, 1.0, gt.association_box, centroid_angle))
        records.append(
            {
                "pair_id": k,
                "shape": p.shape,
                "footprint": p.footprint.as_list(),
                "object_height": p.object_height,
                "length_scale": p.length_scale,
                "centroid_angle": centroid_angle,
            }
        )

    rng = _rng(spec.seed, image_id, 1)
    noisy_instances = [_noisy_instance(d, rng, spec.noise, W, H) for d in true_instances]
    noisy_assocs = [_noisy_association(d, rng, spec.noise, W, H) for d in true_assocs]
    fp_instances, fp_assocs = _false_positives(spec, image_id, len(true_instances) + len(true_assocs))
    return theta, gt_pairs, records, (true_instances, true_assocs), (
        noisy_instances, noisy_assocs, fp_instances, fp_assocs
    )


def generate(spec: SceneSpec = SceneSpec()) -> SynthResult:
    """Generate ground truth, perfect and noisy predictions, and a manifest."""
    images, pairs = {}, {}
    perfect, noisy = Predictions(), Predictions()
    manifest_images = []
    for image_id in range(spec.num_images):
        theta, gt_pairs, records, (tis, tas), (nis, nas, fis, fas) = _image(spec, image_id)
        images[image_id] = ImageInfo(image_id, spec.width, spec.height)
        pairs[image_id] = gt_pairs

        for k, rec in enumerate(records):
            s_id = len(perfect.instances)
            perfect.instances.append(replace(tis[2 * k], id=s_id))
            perfect.instances.append(replace(tis[2 * k + 1], id=s_id + 1))
            a_id = len(perfect.associations)
            perfect.associations.append(replace(tas[k], id=a_id))
            rec.update(shadow_id=s_id, object_id=s_id + 1, association_id=a_id)

        noisy_true = []
        for k in range(len(records)):
            ids = {"pair_id": k}
            for key, det in (("shadow_id", nis[2 * k]), ("object_id", nis[2 * k + 1])):
                if det is None:
                    ids[key] = None
                else:
                    ids[key] = len(noisy.instances)
                    noisy.instances.append(replace(det, id=ids[key]))
            if nas[k] is None:
                ids["association_id"] = None
            else:
                ids["association_id"] = len(noisy.associations)
                noisy.associations.append(replace(nas[k], id=ids["association_id"]))
            noisy_true.append(ids)
        fp_ids = {"instance_ids": [], "association_ids": []}
        for det in fis:
            fp_ids["instance_ids"].append(len(noisy.instances))
            noisy.instances.append(replace(det, id=len(noisy.instances)))
        for det in fas:
            fp_ids["association_ids"].append(len(noisy.associations))
            noisy.associations.append(replace(det, id=len(noisy.associations)))

        manifest_images.append(
            {
                "id": image_id,
                "width": spec.width,
                "height": spec.height,
                "light_angle": theta,
                "num_pairs": len(records),
                "pairs": records,
                "noisy_true_ids": noisy_true,
                "noisy_false_positive_ids": fp_ids,
            }
        )

    gt = GroundTruthDataset(images, pairs)
    manifest = {
        "format_version": FORMAT_VERSION,
        "prng": PRNG_DOC,
        "spec": spec.to_dict(),
        "totals": {
            "images": gt.num_images,
            "pairs": gt.num_pairs,
            "perfect_instances": len(perfect.instances),
            "perfect_associations": len(perfect.associations),
            "noisy_instances": len(noisy.instances),
            "noisy_associations": len(noisy.associations),
        },
        "images": manifest_images,
    }
    return SynthResult(gt, perfect, noisy, manifest)
