"""
Light direction from shadow/object pairs
========================================

The direction from a shadow toward its object points at the light. We cast
a few synthetic shadows, measure that direction from mask centroids, and
average per image with a circular mean.
"""

import math

import numpy as np

from instshadow import mask as M
from instshadow.geometry import BBox
from instshadow.light import circular_mean, ground_truth_angle, light_loss, project_shadow, wrap_angle

W, H = 256, 256
theta = math.radians(-60)  # the light sits up and to the right

footprints = [BBox(60, 150, 76, 190), BBox(140, 120, 170, 150), BBox(190, 160, 200, 190)]
angles = []
for fp in footprints:
    shadow = project_shadow(fp, object_height=fp.height(), light=theta, length_scale=1.2, width=W, height=H)
    footprint = M.Mask.from_box(fp, W, H)
    a = ground_truth_angle(M.centroid(shadow), M.centroid(footprint))
    angles.append(a)
    print(f"footprint {fp.as_list()}: {math.degrees(a):7.2f} deg, shadow area {M.area(shadow)}")

est = circular_mean(angles)
print(f"true {math.degrees(theta):.2f} deg, estimate {math.degrees(est):.2f} deg")

###############################################################################
# The smooth-L1 penalty and angle wrapping

for d in (0.5, 1.0, 2.0):
    print(f"loss({d}) = {light_loss(d, 0.0)}")

# -3 and 3 radians are only about 0.28 apart on the circle
print("wrapped", round(light_loss(-3.0, 3.0), 4), "raw", light_loss(-3.0, 3.0, wrap=False))
print(wrap_angle(np.array([-math.pi, 3 * math.pi, 7.0])))

# an average of raw numbers would say 0 here, the circular mean says pi
print(circular_mean([3.0, -3.0]))
