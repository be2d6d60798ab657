"""
Scoring pairs with SOAP
=======================

A predicted pair only counts when its shadow, its object and its
association all overlap the same ground-truth pair well enough. Average
precision is then computed as usual, over a grid of IoU thresholds.
"""

from instshadow.association import PairedAssociation
from instshadow.geometry import BBox, merge
from instshadow.mask import Mask, union
from instshadow.model import AssociationDetection, GroundTruthDataset, GroundTruthPair, ImageInfo, InstanceDetection
from instshadow.soap import SoapConfig, evaluate, format_table, report_row

W, H = 20, 20


def gt_pair(pid, shadow_box, object_box):
    s = Mask.from_box(BBox(*shadow_box), W, H)
    o = Mask.from_box(BBox(*object_box), W, H)
    return GroundTruthPair(0, pid, s, union(s, o))


def prediction(shadow_box, object_box, score):
    s = InstanceDetection(0, "shadow", score, BBox(*shadow_box), Mask.from_box(BBox(*shadow_box), W, H))
    o = InstanceDetection(0, "object", score, BBox(*object_box), Mask.from_box(BBox(*object_box), W, H))
    a = AssociationDetection(0, score, merge(s.box, o.box), 0.0)
    return PairedAssociation(s, o, a, union(s.mask, o.mask), score, 0.0, 1.0)


gt = GroundTruthDataset(
    {0: ImageInfo(0, W, H)},
    {0: [gt_pair(0, (0, 0, 4, 4), (4, 0, 8, 4)), gt_pair(1, (10, 10, 14, 14), (14, 10, 18, 14))]},
)

# a hit, a miss, then another hit
preds = [
    prediction((0, 0, 4, 4), (4, 0, 8, 4), 0.9),
    prediction((0, 10, 3, 13), (3, 10, 6, 13), 0.8),
    prediction((10, 10, 14, 14), (14, 10, 18, 14), 0.7),
]

report = evaluate(preds, gt, SoapConfig(thresholds=(0.5,)))
# precision 1 up to recall 0.5, then 2/3 up to recall 1
print("AP@0.5 =", round(report.ap[0], 4), "=", round((51 + 50 * 2 / 3) / 101, 4))

###############################################################################
# The full threshold grid, in both variants

rows = []
for variant in ("box", "mask"):
    r = evaluate(preds, gt, SoapConfig(variant=variant))
    print(format_table([report_row("toy", r)], variant))
    print()
    rows.append(r)

# the per-threshold AP never rises as the threshold gets stricter
print([round(v, 3) for v in rows[0].ap])
