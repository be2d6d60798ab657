"""Binary instance masks stored as uncompressed run-length encodings.

Runs are taken over the column-major scan of an ``height x width`` grid,
starting with a run of zeros (possibly empty) and alternating from there.
This is the uncompressed RLE layout used by common detection datasets, so
counts can be read and written verbatim.

Set operations work directly on the runs: a mask is viewed as a sorted list
of half-open foreground intervals ``[start, end)`` over the flat scan
index, which keeps IoU computations independent of the image size.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence, Tuple

import numpy as np

from .geometry import BBox, Point

Intervals = Tuple[np.ndarray, np.ndarray]


@dataclass(frozen=True)
class Mask:
    width: int
    height: int
    counts: Tuple[int, ...]

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"mask dimensions must be positive, got {self.width}x{self.height}")
        counts = tuple(int(c) for c in self.counts)
        object.__setattr__(self, "counts", counts)
        if not counts:
            raise ValueError("RLE counts are empty")
        if any(c < 0 for c in counts):
            raise ValueError("RLE counts must be non-negative")
        if any(c == 0 for c in counts[1:]):
            raise ValueError("only the first RLE count may be zero")
        if sum(counts) != self.width * self.height:
            raise ValueError(
                f"RLE counts sum to {sum(counts)}, expected {self.width * self.height} "
                f"for a {self.width}x{self.height} mask"
            )

    @classmethod
    def empty(cls, width: int, height: int) -> "Mask":
        return cls(width, height, (width * height,))

    @classmethod
    def from_box(cls, box: BBox, width: int, height: int) -> "Mask":
        """Solid rectangle of every pixel whose center lies inside ``box``."""
        c0 = max(int(np.ceil(box.x_min - 0.5)), 0)
        c1 = min(int(np.ceil(box.x_max - 0.5)), width)
        r0 = max(int(np.ceil(box.y_min - 0.5)), 0)
        r1 = min(int(np.ceil(box.y_max - 0.5)), height)
        if c1 <= c0 or r1 <= r0:
            return cls.empty(width, height)
        cols = np.arange(c0, c1, dtype=np.int64)
        starts = cols * height + r0
        ends = cols * height + r1
        return _from_intervals(_normalize(starts, ends), width, height)

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.height, self.width)

    def intervals(self) -> Intervals:
        bounds = np.cumsum(np.asarray(self.counts, dtype=np.int64))
        n = len(bounds) // 2
        return bounds[0 : 2 * n : 2], bounds[1 : 2 * n : 2]

    def is_empty(self) -> bool:
        return len(self.counts) == 1

    def to_json(self) -> list:
        return list(self.counts)


def _normalize(starts: np.ndarray, ends: np.ndarray) -> Intervals:
    """Sort intervals, drop empty ones and merge touching neighbours."""
    starts = np.asarray(starts, dtype=np.int64)
    ends = np.asarray(ends, dtype=np.int64)
    keep = ends > starts
    starts, ends = starts[keep], ends[keep]
    if starts.size == 0:
        return starts, ends
    order = np.argsort(starts, kind="stable")
    starts, ends = starts[order], ends[order]
    # running max of ends handles nested or overlapping input
    reach = np.maximum.accumulate(ends)
    new_run = np.ones(starts.size, dtype=bool)
    new_run[1:] = starts[1:] > reach[:-1]
    first = np.flatnonzero(new_run)
    last = np.append(first[1:], starts.size) - 1
    return starts[first], reach[last]


def _from_intervals(iv: Intervals, width: int, height: int) -> Mask:
    starts, ends = iv
    n = width * height
    if starts.size == 0:
        return Mask.empty(width, height)
    if starts[0] < 0 or ends[-1] > n:
        raise ValueError("interval outside the mask grid")
    counts = np.empty(2 * starts.size + 1, dtype=np.int64)
    counts[0] = starts[0]
    counts[1::2] = ends - starts
    counts[2:-1:2] = starts[1:] - ends[:-1]
    counts[-1] = n - ends[-1]
    if counts[-1] == 0:
        counts = counts[:-1]
    return Mask(width, height, tuple(counts.tolist()))


def encode(bitmap) -> Mask:
    """Encode a 2D ``(height, width)`` binary grid."""
    grid = np.asarray(bitmap)
    if grid.ndim != 2 or grid.shape[0] == 0 or grid.shape[1] == 0:
        raise ValueError(f"expected a non-empty 2D grid, got shape {grid.shape}")
    height, width = grid.shape
    flat = grid.astype(bool).ravel(order="F").view(np.int8)
    edges = np.diff(np.concatenate(([0], flat, [0])).astype(np.int8))
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1)
    return _from_intervals((starts, ends), width, height)


def encode_region(sub, x0: int, y0: int, width: int, height: int) -> Mask:
    """Encode a sub-grid placed with its top-left pixel at column ``x0``, row ``y0``.

    Equivalent to pasting ``sub`` into an empty ``height x width`` grid and
    calling :func:`encode`, without materializing the full grid.
    """
    sub = np.asarray(sub, dtype=bool)
    h, w = sub.shape
    if x0 < 0 or y0 < 0 or x0 + w > width or y0 + h > height:
        raise ValueError("region does not fit inside the mask grid")
    padded = np.zeros((w, h + 2), dtype=np.int8)
    padded[:, 1:-1] = sub.T
    edges = np.diff(padded, axis=1)
    sc, sr = np.nonzero(edges == 1)
    ec, er = np.nonzero(edges == -1)
    starts = (x0 + sc).astype(np.int64) * height + y0 + sr
    ends = (x0 + ec).astype(np.int64) * height + y0 + er
    return _from_intervals(_normalize(starts, ends), width, height)


def decode(m: Mask, shape: Sequence[int] = None) -> np.ndarray:
    """Decode to a boolean ``(height, width)`` array.

    ``shape``, when given, is the expected ``(height, width)`` of the target.
    """
    if shape is not None and tuple(shape) != m.shape:
        raise ValueError(f"mask is {m.shape[0]}x{m.shape[1]} (h x w), target is {tuple(shape)}")
    values = (np.arange(len(m.counts)) % 2).astype(bool)
    flat = np.repeat(values, m.counts)
    return flat.reshape((m.height, m.width), order="F")


def _check_same_shape(a: Mask, b: Mask) -> None:
    if a.shape != b.shape:
        raise ValueError(
            f"mask dimension mismatch: {a.width}x{a.height} vs {b.width}x{b.height} (w x h)"
        )


def _combine(a: Mask, b: Mask, op: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> Intervals:
    sa, ea = a.intervals()
    sb, eb = b.intervals()
    pos = np.concatenate([sa, ea, sb, eb])
    if pos.size == 0:
        return pos, pos
    na, nb = sa.size, sb.size
    da = np.concatenate([np.ones(na), -np.ones(na), np.zeros(2 * nb)])
    db = np.concatenate([np.zeros(2 * na), np.ones(nb), -np.ones(nb)])
    cuts, inv = np.unique(pos, return_inverse=True)
    in_a = np.cumsum(np.bincount(inv, weights=da, minlength=cuts.size)) > 0.5
    in_b = np.cumsum(np.bincount(inv, weights=db, minlength=cuts.size)) > 0.5
    # segment i spans [cuts[i], cuts[i+1]); the last one is unbounded and empty
    keep = op(in_a, in_b)[:-1]
    return _normalize(cuts[:-1][keep], cuts[1:][keep])


def union(a: Mask, b: Mask) -> Mask:
    _check_same_shape(a, b)
    return _from_intervals(_combine(a, b, np.logical_or), a.width, a.height)


def intersection(a: Mask, b: Mask) -> Mask:
    _check_same_shape(a, b)
    return _from_intervals(_combine(a, b, np.logical_and), a.width, a.height)


def subtract(a: Mask, b: Mask) -> Mask:
    """Pixels set in ``a`` and not in ``b``."""
    _check_same_shape(a, b)
    return _from_intervals(_combine(a, b, lambda x, y: x & ~y), a.width, a.height)


def area(m: Mask) -> int:
    return int(sum(m.counts[1::2]))


def intersection_area(a: Mask, b: Mask) -> int:
    _check_same_shape(a, b)
    starts, ends = _combine(a, b, np.logical_and)
    return int((ends - starts).sum())


def mask_iou(a: Mask, b: Mask) -> float:
    """Pixel IoU; 0 when both masks are empty."""
    inter = intersection_area(a, b)
    union_area = area(a) + area(b) - inter
    if union_area == 0:
        return 0.0
    return inter / union_area


def is_subset(a: Mask, b: Mask) -> bool:
    return intersection_area(a, b) == area(a)


def bbox_of(m: Mask) -> BBox:
    """Tight box around the foreground, in the pixel-extent convention."""
    starts, ends = m.intervals()
    if starts.size == 0:
        raise ValueError("bbox of an empty mask is undefined")
    h = m.height
    last = ends - 1
    col_s, row_s = np.divmod(starts, h)
    col_e, row_e = np.divmod(last, h)
    wraps = col_s != col_e
    row_min = 0 if wraps.any() else int(row_s.min())
    row_max = h - 1 if wraps.any() else int(row_e.max())
    return BBox.from_pixel_extent(int(col_s[0]), row_min, int(col_e[-1]), row_max)


def centroid(m: Mask) -> Point:
    """Mean of the foreground pixel centers ``(col + 0.5, row + 0.5)``."""
    if m.is_empty():
        raise ValueError("centroid of an empty mask is undefined")
    rows, cols = np.nonzero(decode(m))
    return (float(cols.mean() + 0.5), float(rows.mean() + 0.5))
