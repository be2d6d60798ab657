"""Shadow-Object Average Precision (SOAP).

A predicted pair is a true positive at threshold ``tau`` when its shadow,
its object and its association each reach IoU >= ``tau`` with the same
ground-truth pair. AP follows the COCO conventions: predictions are ranked
by score, greedily matched to unmatched ground truth, and precision is
interpolated at 101 recall points.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Hashable, List, Optional, Sequence, Tuple

import numpy as np

from . import mask as masklib
from ._io import FORMAT_VERSION
from .association import PairedAssociation
from .geometry import iou
from .model import GroundTruthDataset, GroundTruthPair, ValidationError

VARIANTS = ("box", "mask")
DEFAULT_THRESHOLDS = tuple(round(0.5 + 0.05 * i, 2) for i in range(10))
# k / 100 rather than linspace: a recall of exactly k/100 then compares equal
RECALL_POINTS = np.arange(101) / 100.0


def parse_thresholds(text: str) -> Tuple[float, ...]:
    """Parse ``start:step:stop`` (inclusive) or a comma-separated list."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"threshold range must be start:step:stop, got {text!r}")
        start, step, stop = (float(p) for p in parts)
        if step <= 0:
            raise ValueError("threshold step must be positive")
        n = int(round((stop - start) / step)) + 1
        return tuple(round(start + i * step, 10) for i in range(n))
    return tuple(float(p) for p in text.split(",") if p.strip())


@dataclass(frozen=True)
class SoapConfig:
    thresholds: Tuple[float, ...] = DEFAULT_THRESHOLDS
    variant: str = "box"

    def __post_init__(self):
        ts = tuple(float(t) for t in self.thresholds)
        object.__setattr__(self, "thresholds", ts)
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if not ts:
            raise ValueError("at least one IoU threshold is required")
        if any(not 0.0 < t < 1.0 for t in ts):
            raise ValueError("IoU thresholds must lie in (0, 1)")
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("IoU thresholds must be strictly increasing")


@dataclass(frozen=True)
class SoapReport:
    variant: str
    thresholds: Tuple[float, ...]
    ap: Tuple[float, ...]
    tp: Tuple[int, ...]
    fp: Tuple[int, ...]
    fn: Tuple[int, ...]
    num_predictions: int
    num_ground_truth: int

    def ap_at(self, tau: float) -> Optional[float]:
        for t, v in zip(self.thresholds, self.ap):
            if abs(t - tau) < 1e-9:
                return v
        return None

    @property
    def soap50(self) -> Optional[float]:
        return self.ap_at(0.5)

    @property
    def soap75(self) -> Optional[float]:
        return self.ap_at(0.75)

    @property
    def soap(self) -> float:
        return float(np.mean(self.ap))

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "variant": self.variant,
            "SOAP50": self.soap50,
            "SOAP75": self.soap75,
            "SOAP": self.soap,
            "num_predictions": self.num_predictions,
            "num_ground_truth": self.num_ground_truth,
            "per_threshold": [
                {"tau": t, "ap": a, "tp": tp, "fp": fp, "fn": fn}
                for t, a, tp, fp, fn in zip(self.thresholds, self.ap, self.tp, self.fp, self.fn)
            ],
        }


def triple_ious(pred: PairedAssociation, gt: GroundTruthPair, variant: str = "box") -> Tuple[float, float, float]:
    """(shadow, object, association) IoUs between a prediction and a ground-truth pair."""
    if variant == "box":
        return (
            iou(pred.shadow.box, gt.shadow_box),
            iou(pred.object.box, gt.object_box),
            iou(pred.association.box, gt.association_box),
        )
    if variant == "mask":
        if pred.shadow.mask is None or pred.object.mask is None:
            raise ValidationError(
                f"mask evaluation needs instance masks; prediction in image {pred.image_id!r} "
                f"(shadow {pred.shadow.id!r}, object {pred.object.id!r}) has none"
            )
        combined = pred.combined_mask
        if combined is None:
            combined = masklib.union(pred.shadow.mask, pred.object.mask)
        return (
            masklib.mask_iou(pred.shadow.mask, gt.shadow_mask),
            masklib.mask_iou(pred.object.mask, gt.object_mask),
            masklib.mask_iou(combined, gt.association_mask),
        )
    raise ValueError(f"unknown variant {variant!r}")


def is_true_positive(pred: PairedAssociation, gt: GroundTruthPair, tau: float, variant: str = "box") -> bool:
    return min(triple_ious(pred, gt, variant)) >= tau


def average_precision(tp_flags: Sequence[bool], num_gt: int) -> float:
    """101-point interpolated AP from TP flags of score-ranked predictions."""
    if num_gt <= 0:
        raise ValueError("AP needs at least one ground-truth instance")
    flags = np.asarray(tp_flags, dtype=bool)
    if flags.size == 0:
        return 0.0
    tp = np.cumsum(flags)
    fp = np.cumsum(~flags)
    recall = tp / num_gt
    precision = tp / (tp + fp)
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    idx = np.searchsorted(recall, RECALL_POINTS, side="left")
    hit = idx < recall.size
    sampled = np.zeros(RECALL_POINTS.size)
    sampled[hit] = envelope[idx[hit]]
    return float(sampled.mean())


def _gt_order_key(pair: GroundTruthPair):
    pid = pair.pair_id
    return (0, pid, "") if isinstance(pid, (int, float)) else (1, 0, str(pid))


def evaluate(
    preds: Sequence[PairedAssociation],
    gts: GroundTruthDataset,
    config: SoapConfig = SoapConfig(),
) -> SoapReport:
    """Score final pairs against ground truth over every threshold in ``config``."""
    if gts.num_pairs == 0:
        raise ValidationError("ground truth contains no pairs")
    missing = {p.image_id for p in preds} - set(gts.images)
    if missing:
        raise ValidationError(
            f"predictions reference images absent from ground truth: {sorted(map(str, missing))[:5]}"
        )

    by_image: Dict[Hashable, List[int]] = {}
    for i, p in enumerate(preds):
        by_image.setdefault(p.image_id, []).append(i)

    # (prediction index) -> ious against each gt of its image, shape (G, 3)
    gt_lists = {k: sorted(v, key=_gt_order_key) for k, v in gts.pairs.items()}
    ious: List[np.ndarray] = [None] * len(preds)
    for image_id, idxs in by_image.items():
        gl = gt_lists[image_id]
        for i in idxs:
            ious[i] = np.array([triple_ious(preds[i], g, config.variant) for g in gl]).reshape(len(gl), 3)

    order = sorted(range(len(preds)), key=lambda i: -preds[i].combined_score)
    num_gt = gts.num_pairs
    aps, tps, fps, fns = [], [], [], []
    for tau in config.thresholds:
        taken = {k: np.zeros(len(v), dtype=bool) for k, v in gt_lists.items()}
        flags = []
        for i in order:
            m = ious[i]
            free = ~taken[preds[i].image_id]
            ok = False
            if m.shape[0] and free.any():
                worst = np.where(free, m.min(axis=1), -1.0)
                # ties on the minimum: higher association IoU, then lower pair id
                best = int(np.lexsort((np.arange(len(worst)), -m[:, 2], -worst))[0])
                if worst[best] >= tau:
                    taken[preds[i].image_id][best] = True
                    ok = True
            flags.append(ok)
        ntp = int(sum(flags))
        aps.append(average_precision(flags, num_gt))
        tps.append(ntp)
        fps.append(len(flags) - ntp)
        fns.append(num_gt - ntp)
    return SoapReport(
        variant=config.variant,
        thresholds=config.thresholds,
        ap=tuple(aps),
        tp=tuple(tps),
        fp=tuple(fps),
        fn=tuple(fns),
        num_predictions=len(preds),
        num_ground_truth=num_gt,
    )


def format_table(rows: Sequence[Tuple[str, Optional[float], Optional[float], float]], variant: str = "box") -> str:
    """Aligned text table of (method, SOAP50, SOAP75, SOAP) rows, values in [0, 1]."""
    header = ["Method", f"{variant} SOAP50", f"{variant} SOAP75", f"{variant} SOAP"]
    body = [
        [name] + ["-" if v is None else f"{100 * v:.1f}" for v in values]
        for name, *values in rows
    ]
    widths = [max(len(r[c]) for r in [header, *body]) for c in range(4)]
    lines = []
    for r in [header, *body]:
        cells = [r[0].ljust(widths[0])] + [r[c].rjust(widths[c]) for c in range(1, 4)]
        lines.append("  ".join(cells))
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def report_row(method: str, report: SoapReport) -> Tuple[str, Optional[float], Optional[float], float]:
    return (method, report.soap50, report.soap75, report.soap)
