"""
Pairing shadows with objects
============================

Raw detections come as three unrelated lists: shadow instances, object
instances and association boxes. Pairing keeps shadow/object combinations
that lie close together, merges their boxes and hands each association box
to the merged box that overlaps it best.
"""

from instshadow.association import MatchConfig, generate_candidates, pair_and_match
from instshadow.geometry import BBox
from instshadow.model import AssociationDetection, InstanceDetection


def shadow(box, score, id):
    return InstanceDetection(0, "shadow", score, BBox(*box), id=id)


def obj(box, score, id):
    return InstanceDetection(0, "object", score, BBox(*box), id=id)


# two people standing side by side, each with a shadow to the left
shadows = [shadow((10, 40, 30, 50), 0.9, 0), shadow((60, 40, 80, 50), 0.8, 1)]
objects = [obj((30, 10, 38, 50), 0.95, 2), obj((80, 12, 88, 50), 0.7, 3)]
associations = [
    AssociationDetection(0, 0.85, BBox(9, 10, 38, 51), light_angle=-0.3, id=0),
    AssociationDetection(0, 0.6, BBox(60, 12, 89, 50), light_angle=-0.35, id=1),
]

###############################################################################
# Candidates: closer than the shadow box height

for c in generate_candidates(shadows, objects):
    print(f"shadow {c.shadow.id} + object {c.object.id}: distance {c.distance:.1f}, merged {c.merged_box.as_list()}")

# shadow boxes are 10 px tall, so each shadow only reaches the object next to it

###############################################################################
# Greedy matching by IoU with the association boxes

result = pair_and_match(shadows, objects, associations)
for p in result.paired:
    print(
        f"shadow {p.shadow.id} object {p.object.id} association {p.association.id}"
        f"  iou={p.match_iou:.3f} score={p.combined_score:.3f}"
    )
print(result.diagnostics())

# a stricter floor leaves the looser association unmatched
strict = pair_and_match(shadows, objects, associations, MatchConfig(iou_floor=0.95))
print("with iou_floor=0.95:", len(strict.paired), "pairs")
