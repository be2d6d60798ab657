"""SVG overlays of shadow-object pairs and light directions."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, List, Optional, Sequence, Tuple
from xml.sax.saxutils import escape

import numpy as np

from . import mask as masklib
from .geometry import BBox, center
from .light import ground_truth_angle
from .mask import Mask

PALETTE = (
    "#e6194b", "#3cb44b", "#4363d8", "#f58231", "#911eb4",
    "#42d4f4", "#f032e6", "#bfef45", "#469990", "#9a6324",
)


@dataclass(frozen=True)
class RenderStyle:
    palette: Tuple[str, ...] = PALETTE
    masks: bool = True
    boxes: bool = True
    associations: bool = True
    arrows: bool = True
    mask_opacity: float = 0.35
    arrow_length: float = 40.0


@dataclass(frozen=True)
class RenderSpec:
    """Inputs and destination of a ``render`` run; at least one input is required."""

    output_dir: str
    gt_path: Optional[str] = None
    pred_path: Optional[str] = None
    style: RenderStyle = field(default_factory=RenderStyle)

    def __post_init__(self):
        if self.gt_path is None and self.pred_path is None:
            raise ValueError("render needs a ground-truth file, a prediction file, or both")


def _mask_rects(m: Mask) -> List[Tuple[int, int, int]]:
    """Column runs ``(col, row, length)`` covering the foreground."""
    out = []
    starts, ends = m.intervals()
    h = m.height
    for s, e in zip(starts.tolist(), ends.tolist()):
        while s < e:
            col, row = divmod(s, h)
            n = min(e - s, h - row)
            out.append((col, row, n))
            s += n
    return out


def _mask_svg(m: Mask, color: str, opacity: float) -> str:
    rects = "".join(
        f'<rect x="{c}" y="{r}" width="1" height="{n}"/>' for c, r, n in _mask_rects(m)
    )
    return f'<g fill="{color}" fill-opacity="{opacity}" stroke="none">{rects}</g>'


def _box_svg(box: BBox, color: str, dashed: bool = False, width: float = 1.5) -> str:
    dash = ' stroke-dasharray="4 3"' if dashed else ""
    return (
        f'<rect x="{box.x_min:g}" y="{box.y_min:g}" width="{box.width():g}" height="{box.height():g}" '
        f'fill="none" stroke="{color}" stroke-width="{width}"{dash}/>'
    )


def _arrow_svg(start: Tuple[float, float], theta: float, length: float, color: str) -> str:
    x1 = start[0] + length * math.cos(theta)
    y1 = start[1] + length * math.sin(theta)
    return (
        f'<line x1="{start[0]:.2f}" y1="{start[1]:.2f}" x2="{x1:.2f}" y2="{y1:.2f}" '
        f'stroke="{color}" stroke-width="2" marker-end="url(#arrow)"/>'
    )


def render_svg(
    image_id: Hashable,
    width: float,
    height: float,
    gt_pairs: Sequence = (),
    paired: Sequence = (),
    style: RenderStyle = RenderStyle(),
    image_angle: Optional[float] = None,
) -> str:
    """One SVG document: ground truth dashed, predictions solid, one color per pair."""
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:g}" height="{height:g}" '
        f'viewBox="0 0 {width:g} {height:g}">',
        f"<title>image {escape(str(image_id))}</title>",
        '<defs><marker id="arrow" viewBox="0 0 10 10" refX="9" refY="5" markerWidth="6" '
        'markerHeight="6" orient="auto-start-reverse"><path d="M0,0 L10,5 L0,10 z" '
        'fill="context-stroke"/></marker></defs>',
        f'<rect width="{width:g}" height="{height:g}" fill="#ffffff"/>',
    ]
    for k, gt in enumerate(gt_pairs):
        color = style.palette[k % len(style.palette)]
        parts.append(f'<g class="gt" data-pair-id="{escape(str(gt.pair_id))}">')
        if style.masks:
            parts.append(_mask_svg(gt.shadow_mask, "#333333", style.mask_opacity))
            parts.append(_mask_svg(gt.object_mask, color, style.mask_opacity))
        if style.boxes:
            parts.append(_box_svg(gt.shadow_box, color, dashed=True, width=1))
            parts.append(_box_svg(gt.object_box, color, dashed=True, width=1))
        if style.associations:
            parts.append(_box_svg(gt.association_box, color, dashed=True, width=2))
        if style.arrows:
            sc = masklib.centroid(gt.shadow_mask)
            theta = ground_truth_angle(sc, masklib.centroid(gt.object_mask))
            parts.append(_arrow_svg(sc, theta, style.arrow_length, color))
        parts.append("</g>")
    for k, p in enumerate(paired):
        color = style.palette[(k + len(gt_pairs)) % len(style.palette)]
        parts.append(f'<g class="pred" data-association-id="{escape(str(p.association.id))}">')
        if style.masks and p.shadow.mask is not None and p.object.mask is not None:
            parts.append(_mask_svg(p.shadow.mask, "#000000", style.mask_opacity))
            parts.append(_mask_svg(p.object.mask, color, style.mask_opacity))
        if style.boxes:
            parts.append(_box_svg(p.shadow.box, color))
            parts.append(_box_svg(p.object.box, color))
        if style.associations:
            parts.append(_box_svg(p.association.box, color, width=2.5))
        if style.arrows:
            parts.append(_arrow_svg(center(p.shadow.box), p.light_angle, style.arrow_length, color))
        parts.append("</g>")
    if image_angle is not None:
        parts.append(_arrow_svg((width / 2, height / 2), image_angle, min(width, height) / 4, "#000000"))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def canvas_size(paired: Sequence) -> Tuple[float, float]:
    """Canvas for predictions without an image table: mask size, else box extent."""
    for p in paired:
        for det in (p.shadow, p.object):
            if det.mask is not None:
                return float(det.mask.width), float(det.mask.height)
    if not paired:
        return 1.0, 1.0
    xs = [b.x_max for p in paired for b in (p.shadow.box, p.object.box, p.association.box)]
    ys = [b.y_max for p in paired for b in (p.shadow.box, p.object.box, p.association.box)]
    return float(np.ceil(max(xs))), float(np.ceil(max(ys)))
