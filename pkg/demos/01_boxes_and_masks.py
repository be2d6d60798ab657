"""
Boxes, masks and run-length encoding
====================================

Boxes use continuous pixel coordinates: a single pixel at column 3, row 4
covers [3, 4) x [4, 5). Masks are stored as column-major run lengths that
start with a run of zeros.
"""

import numpy as np

from instshadow import mask as M
from instshadow.geometry import BBox, iou, merge, shortest_distance

# a one-pixel box has unit area
pixel = BBox.from_pixel_extent(3, 4, 3, 4)
print(pixel, pixel.area())

# two boxes side by side: they touch, so IoU is zero and so is the distance
left = BBox(0, 0, 4, 4)
right = BBox(4, 0, 8, 4)
print("iou", iou(left, right), "distance", shortest_distance(left, right))
print("merged", merge(left, right).as_list())

###############################################################################
# Encoding a small grid

grid = np.zeros((2, 2), dtype=bool)
grid[0, 1] = True
m = M.encode(grid)
# the scan runs down each column: (0,0), (1,0), (0,1), (1,1)
print("counts", m.counts)
print(M.decode(m).astype(int))

###############################################################################
# Set operations work directly on runs, without decoding

W, H = 64, 48
shadow = M.Mask.from_box(BBox(8, 8, 24, 20), W, H)
obj = M.Mask.from_box(BBox(24, 4, 32, 20), W, H)
assoc = M.union(shadow, obj)
print("areas", M.area(shadow), M.area(obj), M.area(assoc))
print("object back out of the association:", M.subtract(assoc, shadow) == obj)

# for solid rectangles mask IoU and box IoU agree
a, b = BBox(8, 8, 24, 20), BBox(12, 10, 30, 22)
print(M.mask_iou(M.Mask.from_box(a, W, H), M.Mask.from_box(b, W, H)), iou(a, b))

# measures derived from a mask
print("bbox", M.bbox_of(assoc).as_list(), "centroid", M.centroid(assoc))
