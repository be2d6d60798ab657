"""Pair predicted shadow and object instances and match them to association boxes.

Per image:

1. every (shadow, object) pair whose boxes lie closer than the shadow box
   height becomes a candidate;
2. each candidate gets the merged box of its two instance boxes;
3. (candidate, association) pairs are taken greedily by descending IoU of
   merged box and association box, each detection used at most once.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, List, Optional, Sequence

from . import mask as masklib
from ._io import FORMAT_VERSION, read_json, write_json
from .geometry import BBox, iou, merge, shortest_distance
from .mask import Mask
from .model import (
    AssociationDetection,
    InstanceDetection,
    Predictions,
    ValidationError,
)

SCORE_MODES = ("geometric_mean", "min", "association_score")


@dataclass(frozen=True)
class MatchConfig:
    threshold_scale: float = 1.0
    iou_floor: float = 0.0
    score_mode: str = "geometric_mean"

    def __post_init__(self):
        if self.score_mode not in SCORE_MODES:
            raise ValueError(f"score_mode must be one of {SCORE_MODES}, got {self.score_mode!r}")
        if not self.threshold_scale >= 0:
            raise ValueError("threshold_scale must be non-negative")
        if not 0.0 <= self.iou_floor < 1.0:
            raise ValueError("iou_floor must lie in [0, 1)")

    def to_dict(self) -> dict:
        return {
            "threshold_scale": self.threshold_scale,
            "iou_floor": self.iou_floor,
            "score_mode": self.score_mode,
        }


@dataclass(frozen=True)
class CandidatePair:
    shadow: InstanceDetection
    object: InstanceDetection
    merged_box: BBox
    distance: float


@dataclass(frozen=True)
class PairedAssociation:
    shadow: InstanceDetection
    object: InstanceDetection
    association: AssociationDetection
    combined_mask: Optional[Mask]
    combined_score: float
    light_angle: float
    match_iou: float

    @property
    def image_id(self) -> Hashable:
        return self.association.image_id

    @property
    def merged_box(self) -> BBox:
        return merge(self.shadow.box, self.object.box)

    def to_dict(self) -> dict:
        return {
            "image_id": self.image_id,
            "shadow": self.shadow.to_dict(),
            "object": self.object.to_dict(),
            "association_id": self.association.id,
            "association_score": self.association.score,
            "association_box": self.association.box.as_list(),
            "combined_score": self.combined_score,
            "light_angle": self.light_angle,
            "match_iou": self.match_iou,
        }

    @classmethod
    def from_dict(cls, entry: dict) -> "PairedAssociation":
        try:
            shadow = InstanceDetection.from_dict(entry["shadow"])
            obj = InstanceDetection.from_dict(entry["object"])
            assoc = AssociationDetection(
                image_id=entry["image_id"],
                score=float(entry["association_score"]),
                box=BBox.from_list(entry["association_box"]),
                light_angle=float(entry["light_angle"]),
                id=entry.get("association_id"),
            )
            combined_score = float(entry["combined_score"])
            match_iou = float(entry["match_iou"])
        except ValidationError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed paired entry: {exc!r}") from None
        if not 0.0 <= combined_score <= 1.0:
            raise ValidationError(f"combined score {combined_score!r} outside [0, 1]")
        return cls(shadow, obj, assoc, _combined_mask(shadow, obj), combined_score,
                   assoc.light_angle, match_iou)


@dataclass
class MatchResult:
    """Final pairs for one image plus the detections left unmatched."""

    image_id: Hashable
    paired: List[PairedAssociation] = field(default_factory=list)
    unmatched_shadows: List[InstanceDetection] = field(default_factory=list)
    unmatched_objects: List[InstanceDetection] = field(default_factory=list)
    unmatched_associations: List[AssociationDetection] = field(default_factory=list)
    num_candidates: int = 0

    def diagnostics(self) -> dict:
        return {
            "image_id": self.image_id,
            "paired": len(self.paired),
            "candidates": self.num_candidates,
            "unmatched_shadows": len(self.unmatched_shadows),
            "unmatched_objects": len(self.unmatched_objects),
            "unmatched_associations": len(self.unmatched_associations),
            "unmatched_shadow_ids": [d.id for d in self.unmatched_shadows],
            "unmatched_object_ids": [d.id for d in self.unmatched_objects],
            "unmatched_association_ids": [d.id for d in self.unmatched_associations],
        }


def _sort_key(det):
    b = det.box
    return (-det.score, b.x_min, b.y_min, b.x_max, b.y_max, -1 if det.id is None else det.id)


def _single_image(*groups) -> Optional[Hashable]:
    ids = {d.image_id for g in groups for d in g}
    if len(ids) > 1:
        raise ValueError(f"detections from several images passed together: {sorted(map(str, ids))}")
    return next(iter(ids), None)


def _check_kind(dets, kind):
    for d in dets:
        if d.kind != kind:
            raise ValueError(f"expected {kind} detections, got a {d.kind} (id {d.id!r})")


def generate_candidates(
    shadows: Sequence[InstanceDetection],
    objects: Sequence[InstanceDetection],
    threshold_scale: float = 1.0,
) -> List[CandidatePair]:
    """All shadow/object pairs closer than ``threshold_scale`` times the shadow box height."""
    _single_image(shadows, objects)
    _check_kind(shadows, "shadow")
    _check_kind(objects, "object")
    out = []
    for s in shadows:
        limit = s.box.height() * threshold_scale
        for o in objects:
            dist = shortest_distance(s.box, o.box)
            if dist < limit:
                out.append(CandidatePair(s, o, merge(s.box, o.box), dist))
    return out


def combine_scores(shadow: float, obj: float, assoc: float, mode: str = "geometric_mean") -> float:
    if mode == "geometric_mean":
        return (shadow * obj * assoc) ** (1.0 / 3.0)
    if mode == "min":
        return min(shadow, obj, assoc)
    if mode == "association_score":
        return assoc
    raise ValueError(f"unknown score mode {mode!r}")


def _combined_mask(shadow: InstanceDetection, obj: InstanceDetection) -> Optional[Mask]:
    if shadow.mask is None or obj.mask is None:
        return None
    return masklib.union(shadow.mask, obj.mask)


def pair_and_match(
    shadows: Sequence[InstanceDetection],
    objects: Sequence[InstanceDetection],
    associations: Sequence[AssociationDetection],
    config: MatchConfig = MatchConfig(),
) -> MatchResult:
    """Turn one image's raw detections into final shadow-object pairs.

    Inputs are first put in a canonical order (score descending, then box
    corners, then id), so the output does not depend on input order. Equal
    IoUs are resolved by the lower (shadow, object, association) position in
    that order.
    """
    image_id = _single_image(shadows, objects, associations)
    shadows = sorted(shadows, key=_sort_key)
    objects = sorted(objects, key=_sort_key)
    associations = sorted(associations, key=_sort_key)
    candidates = generate_candidates(shadows, objects, config.threshold_scale)
    s_index = {id(d): i for i, d in enumerate(shadows)}
    o_index = {id(d): i for i, d in enumerate(objects)}

    edges = []
    for cand in candidates:
        si, oi = s_index[id(cand.shadow)], o_index[id(cand.object)]
        for ai, assoc in enumerate(associations):
            value = iou(cand.merged_box, assoc.box)
            if value > config.iou_floor:
                edges.append((-value, si, oi, ai, cand))
    edges.sort(key=lambda e: e[:4])

    used_s, used_o, used_a = set(), set(), set()
    result = MatchResult(image_id, num_candidates=len(candidates))
    for neg_iou, si, oi, ai, cand in edges:
        if si in used_s or oi in used_o or ai in used_a:
            continue
        used_s.add(si)
        used_o.add(oi)
        used_a.add(ai)
        assoc = associations[ai]
        result.paired.append(
            PairedAssociation(
                shadow=cand.shadow,
                object=cand.object,
                association=assoc,
                combined_mask=_combined_mask(cand.shadow, cand.object),
                combined_score=combine_scores(
                    cand.shadow.score, cand.object.score, assoc.score, config.score_mode
                ),
                light_angle=assoc.light_angle,
                match_iou=-neg_iou,
            )
        )
    result.unmatched_shadows = [d for i, d in enumerate(shadows) if i not in used_s]
    result.unmatched_objects = [d for i, d in enumerate(objects) if i not in used_o]
    result.unmatched_associations = [d for i, d in enumerate(associations) if i not in used_a]
    return result


def match_predictions(predictions: Predictions, config: MatchConfig = MatchConfig()) -> List[MatchResult]:
    """Run :func:`pair_and_match` on every image of a prediction set."""
    return [
        pair_and_match(shadows, objects, assocs, config)
        for shadows, objects, assocs in predictions.by_image().values()
    ]


def all_paired(results: Sequence[MatchResult]) -> List[PairedAssociation]:
    return [p for r in results for p in r.paired]


def paired_to_dict(results: Sequence[MatchResult], config: MatchConfig) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "config": config.to_dict(),
        "paired": [p.to_dict() for p in all_paired(results)],
    }


def diagnostics_to_dict(results: Sequence[MatchResult]) -> dict:
    per_image = [r.diagnostics() for r in results]
    keys = ("paired", "candidates", "unmatched_shadows", "unmatched_objects", "unmatched_associations")
    return {
        "format_version": FORMAT_VERSION,
        "totals": {k: sum(d[k] for d in per_image) for k in keys},
        "images": per_image,
    }


def save_paired(results: Sequence[MatchResult], path, config: MatchConfig = MatchConfig()) -> None:
    write_json(path, paired_to_dict(results, config))


def paired_from_dict(data: Optional[dict]) -> List[PairedAssociation]:
    if data is None:
        return []
    if not isinstance(data, dict) or "paired" not in data:
        raise ValidationError("paired-association data needs a 'paired' list")
    return [PairedAssociation.from_dict(e) for e in data["paired"]]


def load_paired(path) -> List[PairedAssociation]:
    try:
        return paired_from_dict(read_json(path))
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None
