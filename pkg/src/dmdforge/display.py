"""Synthetic display images from one real photo per device mode.

The photo is binarized with Otsu's threshold to recover the display's
foreground (digit) and background colors. Each region of interest is then
cleared to the background color and a dictionary value is drawn into it.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .dictionaries import Dictionary, sample_value
from .errors import (
    DegenerateImage,
    MissingDictionary,
    RoiCountMismatch,
    RoiOutOfBounds,
    RoiOverlap,
    UnknownFont,
    ValueTooLong,
)
from .fonts import resolve_font_set
from .images import read_rgb, write_rgb

log = logging.getLogger(__name__)

LUMA_WEIGHTS = (0.299, 0.587, 0.114)
MARGIN_FRACTION = 0.04
MIN_GLYPH_PX = 6


@dataclass(frozen=True)
class RegionOfInterest:
    x: int
    y: int
    width: int
    height: int
    label_index: int = 0

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise RoiOutOfBounds(f"ROI must have positive size, got {self.width}x{self.height}")

    def to_json(self):
        return {"x": self.x, "y": self.y, "w": self.width, "h": self.height, "label_index": self.label_index}

    @classmethod
    def from_json(cls, d):
        return cls(int(d["x"]), int(d["y"]), int(d["w"]), int(d["h"]), int(d.get("label_index", 0)))

    def inside(self, width, height):
        return self.x >= 0 and self.y >= 0 and self.x + self.width <= width and self.y + self.height <= height

    def overlaps(self, other):
        return not (
            self.x + self.width <= other.x
            or other.x + other.width <= self.x
            or self.y + self.height <= other.y
            or other.y + other.height <= self.y
        )


@dataclass(frozen=True)
class Label:
    measurement_type: str
    unit: str
    dictionary: str | None = None  # falls back to ``unit``

    @property
    def dictionary_key(self):
        return self.dictionary or self.unit


@dataclass(frozen=True)
class ModeMetadata:
    image_filename: str
    roi_count: int
    mode: str
    labels: tuple
    rois: tuple | None = None
    device: str = ""

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        if self.rois is not None:
            object.__setattr__(self, "rois", tuple(self.rois))
        if self.roi_count < 1:
            raise RoiCountMismatch("roi_count must be at least 1")
        if len(self.labels) != self.roi_count:
            raise RoiCountMismatch(f"{len(self.labels)} labels for roi_count={self.roi_count}")
        if self.rois is not None and len(self.rois) != self.roi_count:
            raise RoiCountMismatch(f"{len(self.rois)} ROIs for roi_count={self.roi_count}")

    @classmethod
    def from_json(cls, d):
        rois = d.get("rois")
        return cls(
            image_filename=d["image_filename"],
            roi_count=int(d["roi_count"]),
            mode=d["mode"],
            labels=tuple(Label(l["measurement_type"], l["unit"], l.get("dictionary")) for l in d["labels"]),
            rois=None if not rois else tuple(RegionOfInterest.from_json(r) for r in rois),
            device=d.get("device", ""),
        )

    def to_json(self):
        out = {
            "image_filename": self.image_filename,
            "roi_count": self.roi_count,
            "mode": self.mode,
            "labels": [],
            "rois": [r.to_json() for r in self.rois] if self.rois else [],
        }
        for l in self.labels:
            entry = {"measurement_type": l.measurement_type, "unit": l.unit}
            if l.dictionary:
                entry["dictionary"] = l.dictionary
            out["labels"].append(entry)
        if self.device:
            out["device"] = self.device
        return out


def load_metadata(path) -> ModeMetadata:
    return ModeMetadata.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def save_metadata(metadata: ModeMetadata, path):
    Path(path).write_text(json.dumps(metadata.to_json(), indent=2) + "\n", encoding="utf-8")


@dataclass(frozen=True, eq=False)
class DisplayTemplate:
    image: np.ndarray
    metadata: ModeMetadata
    threshold: int
    fg_color: tuple
    bg_color: tuple
    binary_map: np.ndarray
    name: str = ""
    source: Path | None = None  # metadata JSON path, when loaded from disk

    def with_rois(self, rois):
        return replace(self, metadata=replace(self.metadata, rois=tuple(rois)))


@dataclass
class SyntheticDisplay:
    image: np.ndarray
    values: list
    font_id: str
    template_ref: str
    labels: tuple = field(default_factory=tuple)


def otsu_threshold(histogram: Sequence) -> int:
    """Threshold maximizing the between-class variance of a 256-bin histogram.

    Class 0 holds levels ``<= t``. Ties resolve to the smallest ``t``. The
    comparison is exact (integer or rational arithmetic), so plateaus over
    empty bins are detected as ties rather than split by rounding noise.
    """
    hist = list(histogram)
    if len(hist) != 256:
        raise ValueError(f"expected 256 bins, got {len(hist)}")
    if any(c < 0 for c in hist):
        raise ValueError("histogram counts must be non-negative")
    if all(float(c).is_integer() for c in hist):
        counts = [int(c) for c in hist]
    else:
        counts = [Fraction(float(c)) for c in hist]
    if sum(1 for c in counts if c > 0) < 2:
        raise DegenerateImage("histogram has fewer than two grey levels")

    n_total = sum(counts)
    s_total = sum(i * c for i, c in enumerate(counts))
    best_t, best_num, best_den = 0, 0, 1
    n0 = s0 = 0
    for t in range(255):
        n0 += counts[t]
        s0 += t * counts[t]
        n1 = n_total - n0
        if n0 == 0 or n1 == 0:
            continue
        # w0*w1*(mu0-mu1)^2 = (n1*s0 - n0*s1)^2 / (N^2 * n0 * n1); N^2 is common
        diff = n1 * s0 - n0 * (s_total - s0)
        num, den = diff * diff, n0 * n1
        if num * best_den > best_num * den:
            best_t, best_num, best_den = t, num, den
    return best_t


def to_grey(image: np.ndarray) -> np.ndarray:
    rgb = image[..., :3].astype(np.float64)
    grey = rgb @ np.asarray(LUMA_WEIGHTS)
    return np.clip(np.floor(grey + 0.5), 0, 255).astype(np.uint8)


def binarize_template(image: np.ndarray, metadata: ModeMetadata, name="", source=None) -> DisplayTemplate:
    if image.size == 0:
        raise DegenerateImage("empty image")
    grey = to_grey(image)
    hist = np.bincount(grey.ravel(), minlength=256)
    t = otsu_threshold(hist)
    bright = grey > t
    dark = ~bright
    bright_mean = image[bright][:, :3].mean(axis=0)
    dark_mean = image[dark][:, :3].mean(axis=0)
    # digits cover less of a display than its background
    if bright.sum() <= dark.sum():
        fg, bg = bright_mean, dark_mean
    else:
        fg, bg = dark_mean, bright_mean
    fg_color = tuple(int(v) for v in np.floor(fg + 0.5))
    bg_color = tuple(int(v) for v in np.floor(bg + 0.5))
    if fg_color == bg_color:
        raise DegenerateImage("foreground and background colors coincide")
    return DisplayTemplate(
        image=np.ascontiguousarray(image[..., :3]),
        metadata=metadata,
        threshold=t,
        fg_color=fg_color,
        bg_color=bg_color,
        binary_map=bright,
        name=name,
        source=Path(source) if source is not None else None,
    )


def load_template(metadata_path) -> DisplayTemplate:
    metadata_path = Path(metadata_path)
    metadata = load_metadata(metadata_path)
    image = read_rgb(metadata_path.parent / metadata.image_filename)
    return binarize_template(image, metadata, name=metadata_path.stem, source=metadata_path)


def validate_rois(rois, roi_count, width, height):
    rois = list(rois)
    if len(rois) != roi_count:
        raise RoiCountMismatch(f"expected {roi_count} ROIs, got {len(rois)}")
    for r in rois:
        if not r.inside(width, height):
            raise RoiOutOfBounds(f"{r} exceeds {width}x{height} image")
    for i, a in enumerate(rois):
        for b in rois[i + 1:]:
            if a.overlaps(b):
                raise RoiOverlap(f"{a} overlaps {b}")
    return rois


def define_rois(template: DisplayTemplate, picker: Callable, metadata_path=None) -> list:
    """Return the template's ROIs, asking ``picker`` only when none are stored.

    ``picker(image, roi_count)`` returns ``roi_count`` rectangles. New ROIs are
    written back into the metadata JSON so later runs reuse them.
    """
    meta = template.metadata
    if meta.rois:
        return list(meta.rois)
    h, w = template.image.shape[:2]
    rois = validate_rois(picker(template.image, meta.roi_count), meta.roi_count, w, h)
    path = metadata_path or template.source
    if path is not None:
        save_metadata(replace(meta, rois=tuple(rois)), path)
    return rois


class ScriptedPicker:
    """Picker returning fixed rectangles; records how often it was asked."""

    def __init__(self, rois):
        self.rois = [r if isinstance(r, RegionOfInterest) else RegionOfInterest(*r) for r in rois]
        self.calls = 0

    def __call__(self, image, roi_count):
        self.calls += 1
        return list(self.rois)


def matplotlib_picker(image, roi_count):  # pragma: no cover - interactive
    """Click-drag one rectangle per ROI; close the window when done."""
    import matplotlib.pyplot as plt
    from matplotlib.widgets import RectangleSelector

    boxes = []
    fig, ax = plt.subplots()
    ax.imshow(image)
    ax.set_title(f"drag {roi_count} rectangle(s), in label order")

    def on_select(press, release):
        x0, x1 = sorted((press.xdata, release.xdata))
        y0, y1 = sorted((press.ydata, release.ydata))
        roi = RegionOfInterest(round(x0), round(y0), max(1, round(x1 - x0)), max(1, round(y1 - y0)), len(boxes))
        boxes.append(roi)
        ax.add_patch(plt.Rectangle((roi.x, roi.y), roi.width, roi.height, fill=False, color="r"))
        fig.canvas.draw_idle()
        if len(boxes) == roi_count:
            plt.close(fig)

    selector = RectangleSelector(ax, on_select, interactive=False)
    plt.show()
    del selector
    return boxes


def clear_roi(image: np.ndarray, roi: RegionOfInterest, bg_color) -> np.ndarray:
    h, w = image.shape[:2]
    if not roi.inside(w, h):
        raise RoiOutOfBounds(f"{roi} exceeds {w}x{h} image")
    out = image.copy()
    out[roi.y:roi.y + roi.height, roi.x:roi.x + roi.width] = bg_color
    return out


def _fit_size(face, value, avail_w, avail_h):
    if avail_w < 1 or avail_h < MIN_GLYPH_PX:
        return None
    lo, hi = MIN_GLYPH_PX, avail_h
    w, h = face.extent(value, lo)
    if w > avail_w or h > avail_h:
        return None
    while lo < hi:
        mid = (lo + hi + 1) // 2
        w, h = face.extent(value, mid)
        if w <= avail_w and h <= avail_h:
            lo = mid
        else:
            hi = mid - 1
    return lo


def render_value(image, roi: RegionOfInterest, value: str, font_id: str, fg_color, fonts=None) -> np.ndarray:
    """Draw ``value`` right-aligned and vertically centered inside ``roi``.

    The glyph size is the largest that fits the ROI shrunk by a margin of 4%
    of the ROI height on every side.
    """
    fonts = fonts if fonts is not None else _default_fonts()
    if font_id not in fonts:
        raise UnknownFont(font_id)
    if not value:
        raise ValueError("value must be non-empty")
    h, w = image.shape[:2]
    if not roi.inside(w, h):
        raise RoiOutOfBounds(f"{roi} exceeds {w}x{h} image")
    face = fonts[font_id]
    margin = math.ceil(MARGIN_FRACTION * roi.height)
    avail_w, avail_h = roi.width - 2 * margin, roi.height - 2 * margin
    size = _fit_size(face, value, avail_w, avail_h)
    if size is None:
        raise ValueTooLong(f"{value!r} does not fit a {roi.width}x{roi.height} ROI with face {font_id!r}")
    alpha = face.mask(value, size)
    mh, mw = alpha.shape
    x0 = roi.x + roi.width - margin - mw
    y0 = roi.y + margin + (avail_h - mh) // 2
    out = image.copy()
    region = out[y0:y0 + mh, x0:x0 + mw].astype(np.float64)
    a = alpha.astype(np.float64)[..., None] / 255.0
    blended = region * (1.0 - a) + np.asarray(fg_color, dtype=np.float64) * a
    out[y0:y0 + mh, x0:x0 + mw] = np.floor(blended + 0.5).astype(np.uint8)
    return out


_FONT_CACHE = {}


def _default_fonts():
    if "default" not in _FONT_CACHE:
        _FONT_CACHE["default"] = resolve_font_set(None)
    return _FONT_CACHE["default"]


def _bind_dictionaries(metadata, dictionaries):
    bound = []
    for label in metadata.labels:
        key = label.dictionary_key
        if key not in dictionaries:
            raise MissingDictionary(f"no dictionary {key!r} for {label.measurement_type!r}")
        bound.append(dictionaries[key])
    return bound


def generate_display_images(template: DisplayTemplate, dictionaries: dict, count: int,
                            rng: np.random.Generator, fonts=None) -> list:
    """Generate ``count`` displays; one font per image, one value per ROI."""
    fonts = fonts if fonts is not None else _default_fonts()
    meta = template.metadata
    if not meta.rois:
        raise RoiCountMismatch(f"template {template.name!r} has no ROIs defined")
    bound = _bind_dictionaries(meta, dictionaries)
    font_ids = sorted(fonts)
    out = []
    for _ in range(count):
        font_id = font_ids[int(rng.integers(len(font_ids)))]
        image = template.image
        values = []
        for roi in meta.rois:
            value = sample_value(bound[roi.label_index], rng)
            image = clear_roi(image, roi, template.bg_color)
            image = render_value(image, roi, value, font_id, template.fg_color, fonts)
            values.append(value)
        # values listed in label order regardless of ROI order
        ordered = [None] * meta.roi_count
        for roi, value in zip(meta.rois, values):
            ordered[roi.label_index] = value
        out.append(SyntheticDisplay(image=image, values=ordered, font_id=font_id,
                                    template_ref=template.name, labels=meta.labels))
    return out


DISPLAY_INDEX = "displays.csv"
DISPLAY_COLUMNS = ["id", "device", "mode", "template", "font", "values", "units", "measurement_types", "path"]


def save_displays(displays, template: DisplayTemplate, out_dir, start_index=0):
    """Write PNGs and append rows to ``displays.csv``; returns the rows."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    index = out_dir / DISPLAY_INDEX
    new_file = not index.exists()
    rows = []
    for i, disp in enumerate(displays, start=start_index):
        display_id = f"{template.name}_{i:05d}"
        filename = f"{display_id}.png"
        write_rgb(out_dir / filename, disp.image)
        rows.append({
            "id": display_id,
            "device": template.metadata.device,
            "mode": template.metadata.mode,
            "template": template.name,
            "font": disp.font_id,
            "values": json.dumps(disp.values, ensure_ascii=False),
            "units": json.dumps([l.unit for l in disp.labels], ensure_ascii=False),
            "measurement_types": json.dumps([l.measurement_type for l in disp.labels], ensure_ascii=False),
            "path": filename,
        })
    with index.open("a", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=DISPLAY_COLUMNS)
        if new_file:
            writer.writeheader()
        writer.writerows(rows)
    return rows


def read_display_index(out_dir):
    with (Path(out_dir) / DISPLAY_INDEX).open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
