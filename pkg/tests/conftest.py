import re

import pytest

from instshadow.association import PairedAssociation
from instshadow.geometry import BBox, merge
from instshadow.mask import Mask, union
from instshadow.model import (
    AssociationDetection,
    GroundTruthDataset,
    GroundTruthPair,
    ImageInfo,
    InstanceDetection,
)

_acceptance = {}


def make_instance(kind, box, score=1.0, image_id=0, id=None, size=None):
    box = box if isinstance(box, BBox) else BBox(*box)
    mask = Mask.from_box(box, *size) if size else None
    return InstanceDetection(image_id, kind, score, box, mask, id)


def make_association(box, score=1.0, angle=0.0, image_id=0, id=None):
    box = box if isinstance(box, BBox) else BBox(*box)
    return AssociationDetection(image_id, score, box, angle, id)


def make_paired(shadow_box, object_box, assoc_box=None, score=1.0, image_id=0, size=None, ids=(None, None, None)):
    s = make_instance("shadow", shadow_box, score, image_id, ids[0], size)
    o = make_instance("object", object_box, score, image_id, ids[1], size)
    a = make_association(assoc_box or merge(s.box, o.box), score, 0.0, image_id, ids[2])
    combined = union(s.mask, o.mask) if size else None
    return PairedAssociation(s, o, a, combined, score, 0.0, 1.0)


def make_gt(pairs, width, height, image_id=0):
    """Ground truth from (shadow_box, object_box) rectangles, assumed disjoint."""
    out = []
    for k, (sb, ob) in enumerate(pairs):
        s = Mask.from_box(BBox(*sb), width, height)
        o = Mask.from_box(BBox(*ob), width, height)
        out.append(GroundTruthPair(image_id, k, s, union(s, o)))
    return GroundTruthDataset({image_id: ImageInfo(image_id, width, height)}, {image_id: out})


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    m = re.search(r"test_ac(\d+)_(\w+)", report.nodeid)
    if not m:
        return
    key = (int(m.group(1)), m.group(2))
    if report.when == "call" or report.failed:
        if report.failed or key not in _acceptance:
            _acceptance[key] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for (n, name), outcome in sorted(_acceptance.items()):
        terminalreporter.write_line(f"AC{n} {'PASS' if outcome == 'passed' else 'FAIL'}  {name}")
