"""Light-direction angles, the smooth-L1 angle penalty and shadow projection.

Angles are radians in (-pi, pi], measured in image coordinates (y grows
downward) along the direction from a shadow toward the object casting it.
"""
from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np

from .geometry import BBox, Point, center
from .mask import Mask, encode_region


def wrap_angle(theta):
    """Map angles into the principal range (-pi, pi]."""
    out = math.pi - np.remainder(math.pi - np.asarray(theta, dtype=float), 2 * math.pi)
    # remainder can round up to exactly 2 pi for tiny negative arguments
    out = np.where(out <= -math.pi, out + 2 * math.pi, out)
    return float(out) if np.ndim(out) == 0 else out


def _direction(src: Point, dst: Point, what: str) -> float:
    dx, dy = dst[0] - src[0], dst[1] - src[1]
    if dx == 0 and dy == 0:
        raise ValueError(f"coincident {what}: direction undefined")
    theta = math.atan2(dy, dx)
    # atan2(-0.0, x<0) returns -pi
    return math.pi if theta <= -math.pi else theta


def ground_truth_angle(shadow_centroid: Point, object_centroid: Point) -> float:
    """``atan2(y_obj - y_shadow, x_obj - x_shadow)`` in (-pi, pi]."""
    return _direction(shadow_centroid, object_centroid, "centroids")


def light_loss(theta_p, theta_g, wrap: bool = True):
    """Smooth-L1 penalty on the angle difference.

    ``0.5 d**2`` if ``|d| < 1`` else ``|d| - 0.5``. With ``wrap`` the
    difference is first brought into (-pi, pi], so angles one turn apart
    cost nothing; ``wrap=False`` uses the raw difference.
    """
    d = np.asarray(theta_p, dtype=float) - np.asarray(theta_g, dtype=float)
    if wrap:
        d = np.asarray(wrap_angle(d))
    ad = np.abs(d)
    loss = np.where(ad < 1.0, 0.5 * d * d, ad - 0.5)
    return float(loss) if loss.ndim == 0 else loss


def estimate_pair_direction(pair) -> float:
    """Angle from the shadow box center to the object box center."""
    return _direction(center(pair.shadow.box), center(pair.object.box), "box centers")


def circular_mean(angles: Sequence[float], weights: Optional[Sequence[float]] = None) -> float:
    angles = np.asarray(angles, dtype=float)
    if angles.size == 0:
        raise ValueError("circular mean of no angles")
    w = np.ones_like(angles) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != angles.shape or (w < 0).any():
        raise ValueError("weights must be non-negative and match the angles")
    total = w.sum()
    if total <= 0:
        raise ValueError("weights sum to zero")
    s = float(np.dot(w, np.sin(angles)))
    c = float(np.dot(w, np.cos(angles)))
    if math.hypot(s, c) <= 1e-12 * total:
        raise ValueError("directions cancel out: mean direction undefined")
    return wrap_angle(math.atan2(s, c))


def estimate_image_direction(pairs: Sequence) -> float:
    """Score-weighted circular mean of per-pair box-center directions."""
    if not pairs:
        raise ValueError("no pairs to estimate a light direction from")
    angles = [estimate_pair_direction(p) for p in pairs]
    return circular_mean(angles, [p.combined_score for p in pairs])


def shadow_polygon(footprint: BBox, object_height: float, light: float, length_scale: float) -> np.ndarray:
    """Corners ``(4, 2)`` of the shadow cast by an object standing on ``footprint``.

    The shadow points away from the light, at angle ``light + pi`` from the
    object. Its base is the footprint's silhouette edge facing that way: a
    segment perpendicular to the shadow direction, as wide as the footprint
    seen from that direction and touching the footprint's far side. The base
    is swept ``object_height * length_scale`` pixels along the shadow
    direction, so the shadow's center lies exactly on the ray from the
    footprint center at angle ``light + pi``.
    """
    w, h = footprint.width(), footprint.height()
    if w <= 0 or h <= 0:
        raise ValueError(f"degenerate footprint {footprint.as_list()}")
    if not object_height > 0 or not length_scale > 0:
        raise ValueError("object height and length scale must be positive")
    ux, uy = -math.cos(light), -math.sin(light)
    nx, ny = -uy, ux
    reach = abs(ux) * w / 2 + abs(uy) * h / 2
    half = abs(nx) * w / 2 + abs(ny) * h / 2
    length = object_height * length_scale
    cx, cy = center(footprint)
    bx, by = cx + reach * ux, cy + reach * uy
    return np.array(
        [
            [bx - half * nx, by - half * ny],
            [bx + half * nx, by + half * ny],
            [bx + half * nx + length * ux, by + half * ny + length * uy],
            [bx - half * nx + length * ux, by - half * ny + length * uy],
        ]
    )


def rasterize_polygon(vertices: np.ndarray, width: int, height: int) -> Mask:
    """Mask of pixels whose centers lie inside a convex polygon (edges included)."""
    v = np.asarray(vertices, dtype=float)
    x0 = max(int(math.floor(v[:, 0].min())), 0)
    x1 = min(int(math.ceil(v[:, 0].max())), width)
    y0 = max(int(math.floor(v[:, 1].min())), 0)
    y1 = min(int(math.ceil(v[:, 1].max())), height)
    if x1 <= x0 or y1 <= y0:
        return Mask.empty(width, height)
    xs = np.arange(x0, x1) + 0.5
    ys = np.arange(y0, y1) + 0.5
    px, py = np.meshgrid(xs, ys)
    # orientation sign makes the test independent of vertex winding
    signed = np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1])
    sign = 1.0 if signed >= 0 else -1.0
    inside = np.ones(px.shape, dtype=bool)
    for (ax, ay), (bx, by) in zip(v, np.roll(v, -1, axis=0)):
        cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
        inside &= sign * cross >= -1e-9
    return encode_region(inside, x0, y0, width, height)


def project_shadow(
    footprint: BBox,
    object_height: float,
    light: float,
    length_scale: float,
    width: int,
    height: int,
) -> Mask:
    """Rasterized :func:`shadow_polygon`, clipped to a ``width x height`` image."""
    return rasterize_polygon(shadow_polygon(footprint, object_height, light, length_scale), width, height)
