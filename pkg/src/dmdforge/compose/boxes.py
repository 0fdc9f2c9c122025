"""Placement-box geometry: downscale, rescale, aspect correction, minimum area."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import cv2
import numpy as np

from ..errors import EmptyMask

SCORING_SIDE = 256
MIN_AREA_FRACTION = 0.10


def round_half_away(v: float) -> int:
    return int(math.floor(v + 0.5)) if v >= 0 else -int(math.floor(-v + 0.5))


@dataclass(frozen=True)
class PlacementBox:
    x: int
    y: int
    width: int
    height: int
    source: str = "random"
    corrected: bool = False
    clamped: bool = False

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"box must have positive size, got {self.width}x{self.height}")

    @property
    def area(self):
        return self.width * self.height

    @property
    def key(self):
        return (self.x, self.y, self.width, self.height)

    def inside(self, frame_w, frame_h):
        return self.x >= 0 and self.y >= 0 and self.x + self.width <= frame_w and self.y + self.height <= frame_h


def downscale_background(bg: np.ndarray, side: int = SCORING_SIDE):
    """Shrink so the longest side is ``side`` px; returns (small, scale)."""
    h, w = bg.shape[:2]
    longest = max(h, w)
    if longest <= side:
        return bg, 1.0
    scale = longest / side
    new_w = side if w == longest else round_half_away(w * side / longest)
    new_h = side if h == longest else round_half_away(h * side / longest)
    small = cv2.resize(bg, (max(new_w, 1), max(new_h, 1)), interpolation=cv2.INTER_AREA)
    return small, scale


def clamp_box(box: PlacementBox, frame_w: int, frame_h: int) -> PlacementBox:
    """Fit ``box`` inside the frame.

    An oversized box is shrunk uniformly (keeping its aspect ratio and center)
    and flagged ``clamped``; otherwise it is only shifted.
    """
    w, h, clamped = box.width, box.height, box.clamped
    x, y = box.x, box.y
    if w > frame_w or h > frame_h:
        f = min(frame_w / w, frame_h / h)
        cx, cy = x + w / 2.0, y + h / 2.0
        w = max(1, min(frame_w, int(math.floor(w * f))))
        h = max(1, min(frame_h, int(math.floor(h * f))))
        x, y = round_half_away(cx - w / 2.0), round_half_away(cy - h / 2.0)
        clamped = True
    x = min(max(x, 0), frame_w - w)
    y = min(max(y, 0), frame_h - h)
    return replace(box, x=x, y=y, width=w, height=h, clamped=clamped)


def rescale_box(box_small: PlacementBox, scale: float, frame=None) -> PlacementBox:
    """Map a box from scoring resolution back to the original background.

    ``frame`` is the original (width, height); when given the result is
    clamped into it.
    """
    if scale < 1.0:
        raise ValueError(f"scale must be >= 1, got {scale}")
    box = replace(
        box_small,
        x=round_half_away(box_small.x * scale),
        y=round_half_away(box_small.y * scale),
        width=max(1, round_half_away(box_small.width * scale)),
        height=max(1, round_half_away(box_small.height * scale)),
    )
    if frame is not None:
        box = clamp_box(box, *frame)
    return box


def mask_bbox(mask: np.ndarray):
    """Tight (x, y, w, h) of the non-zero pixels of a mask."""
    ys, xs = np.nonzero(np.asarray(mask) > 0)
    if xs.size == 0:
        raise EmptyMask("mask has no foreground pixels")
    x0, x1 = int(xs.min()), int(xs.max())
    y0, y1 = int(ys.min()), int(ys.max())
    return x0, y0, x1 - x0 + 1, y1 - y0 + 1


def mask_aspect_ratio(mask) -> float:
    _, _, w, h = mask_bbox(mask)
    return w / h


def correct_aspect_ratio(box: PlacementBox, mask) -> PlacementBox:
    """Set the width from the mask's aspect ratio; height and center x stay."""
    ratio = mask_aspect_ratio(mask)
    new_w = max(1, round_half_away(box.height * ratio))
    center_x = box.x + box.width / 2.0
    new_x = round_half_away(center_x - new_w / 2.0)
    return replace(box, x=new_x, width=new_w, corrected=True)


def enforce_min_area(box: PlacementBox, bg_dims, min_fraction: float = MIN_AREA_FRACTION) -> PlacementBox:
    """Grow a box covering less than ``min_fraction`` of the background.

    Growth is uniform about the box center; the result is then clamped to the
    frame. ``bg_dims`` is (width, height).
    """
    frame_w, frame_h = bg_dims
    bg_area = frame_w * frame_h
    if box.area < min_fraction * bg_area:
        f = math.sqrt(min_fraction * bg_area / box.area)
        cx, cy = box.x + box.width / 2.0, box.y + box.height / 2.0
        w = int(math.ceil(box.width * f))
        h = int(math.ceil(box.height * f))
        box = replace(box, x=round_half_away(cx - w / 2.0), y=round_half_away(cy - h / 2.0), width=w, height=h)
    return clamp_box(box, frame_w, frame_h)
