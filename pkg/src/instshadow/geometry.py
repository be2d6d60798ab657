"""Axis-aligned bounding boxes in continuous pixel coordinates.

Origin is the top-left image corner, x grows rightward and y downward.
A box covering pixel indices ``col_min..col_max`` and ``row_min..row_max``
is ``BBox(col_min, row_min, col_max + 1, row_max + 1)``, so a single pixel
has area 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

Point = Tuple[float, float]


@dataclass(frozen=True)
class BBox:
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        for name in ("x_min", "y_min", "x_max", "y_max"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"non-finite box coordinate {name}={getattr(self, name)!r}")
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise ValueError(f"inverted box corners: {self.as_list()}")

    @classmethod
    def from_list(cls, values: Sequence[float]) -> "BBox":
        if len(values) != 4:
            raise ValueError(f"a box needs 4 coordinates, got {len(values)}")
        return cls(*(float(v) for v in values))

    @classmethod
    def from_pixel_extent(cls, col_min: int, row_min: int, col_max: int, row_max: int) -> "BBox":
        """Box covering the inclusive pixel index ranges given."""
        return cls(float(col_min), float(row_min), float(col_max + 1), float(row_max + 1))

    def as_list(self) -> list:
        return [self.x_min, self.y_min, self.x_max, self.y_max]

    def width(self) -> float:
        return self.x_max - self.x_min

    def height(self) -> float:
        return self.y_max - self.y_min

    def area(self) -> float:
        return self.width() * self.height()

    def contains(self, other: "BBox", tol: float = 0.0) -> bool:
        return (
            other.x_min >= self.x_min - tol
            and other.y_min >= self.y_min - tol
            and other.x_max <= self.x_max + tol
            and other.y_max <= self.y_max + tol
        )

    def expand(self, pad: float) -> "BBox":
        return BBox(self.x_min - pad, self.y_min - pad, self.x_max + pad, self.y_max + pad)

    def clip(self, width: float, height: float) -> "BBox":
        x0 = min(max(self.x_min, 0.0), width)
        y0 = min(max(self.y_min, 0.0), height)
        return BBox(x0, y0, max(x0, min(self.x_max, width)), max(y0, min(self.y_max, height)))


def intersection_area(a: BBox, b: BBox) -> float:
    w = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    h = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if w <= 0 or h <= 0:
        return 0.0
    return w * h


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union; 0 when the union has zero area."""
    inter = intersection_area(a, b)
    union = a.area() + b.area() - inter
    if union <= 0:
        return 0.0
    return inter / union


def shortest_distance(a: BBox, b: BBox) -> float:
    """Euclidean distance between the closest points of two rectangles.

    Overlapping or touching rectangles are at distance 0.
    """
    dx = max(0.0, max(a.x_min, b.x_min) - min(a.x_max, b.x_max))
    dy = max(0.0, max(a.y_min, b.y_min) - min(a.y_max, b.y_max))
    return math.hypot(dx, dy)


def merge(a: BBox, b: BBox) -> BBox:
    """Smallest box containing both: min of the min corners, max of the max corners."""
    return BBox(
        min(a.x_min, b.x_min),
        min(a.y_min, b.y_min),
        max(a.x_max, b.x_max),
        max(a.y_max, b.y_max),
    )


def merge_all(boxes: Iterable[BBox]) -> BBox:
    boxes = list(boxes)
    if not boxes:
        raise ValueError("cannot merge an empty collection of boxes")
    out = boxes[0]
    for box in boxes[1:]:
        out = merge(out, box)
    return out


def center(a: BBox) -> Point:
    return ((a.x_min + a.x_max) / 2.0, (a.y_min + a.y_max) / 2.0)
