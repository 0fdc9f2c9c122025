"""Glyph faces used to draw readouts onto display templates.

Two kinds of face share one small interface (``extent`` and ``mask``):

* ``SegmentFace`` draws seven-segment glyphs from polygons. The default font
  set is 24 of these, varying stroke weight, slant, cell aspect and segment gap.
* ``TrueTypeFace`` wraps any TTF/OTF file (e.g. the DSEG family) via Pillow.
"""
from __future__ import annotations

import itertools
from pathlib import Path

import cv2
import numpy as np
from PIL import Image, ImageDraw, ImageFont

from .errors import UnknownFont

SUPERSAMPLE = 4

# a=top, b=upper right, c=lower right, d=bottom, e=lower left, f=upper left, g=middle
_SEGMENTS = {
    "0": "abcdef", "1": "bc", "2": "abdeg", "3": "abcdg", "4": "bcfg",
    "5": "acdfg", "6": "acdefg", "7": "abc", "8": "abcdefg", "9": "abcdfg",
    "-": "g", "_": "d", " ": "",
    "A": "abcefg", "b": "cdefg", "C": "adef", "c": "deg", "d": "bcdeg",
    "E": "adefg", "F": "aefg", "H": "bcefg", "h": "cefg", "L": "def",
    "n": "ceg", "o": "cdeg", "O": "abcdef", "P": "abefg", "r": "eg",
    "t": "defg", "U": "bcdef", "u": "cde", "y": "bcdfg",
}
_ALIASES = {"B": "8", "D": "0", "S": "5", "I": "1", "a": "A", "e": "E", "f": "F", "l": "1"}


class SegmentFace:
    """Procedural seven-segment face; ``size`` is the glyph height in pixels."""

    def __init__(self, face_id, thickness=0.14, slant=0.0, aspect=0.55, gap=0.02, spacing=0.25):
        self.id = face_id
        self.thickness = thickness
        self.slant = slant
        self.aspect = aspect
        self.gap = gap
        self.spacing = spacing

    def __repr__(self):
        return f"SegmentFace({self.id!r})"

    def _advance(self, ch):
        if ch in ".,":
            return 2.0 * self.thickness
        if ch == ":":
            return 2.2 * self.thickness
        return self.aspect

    def supports(self, ch):
        return ch in ".,:" or ch in _SEGMENTS or ch in _ALIASES

    def _width_units(self, text):
        body = sum(self._advance(c) for c in text)
        return body + self.spacing * self.aspect * (len(text) - 1) + self.slant

    def extent(self, text, size):
        return int(np.ceil(self._width_units(text) * size)), int(size)

    def _polygons(self, text):
        t, w, g = self.thickness, self.aspect, self.gap
        h2 = t / 2

        def hseg(x0, x1, yc):
            return [(x0, yc), (x0 + h2, yc - h2), (x1 - h2, yc - h2), (x1, yc),
                    (x1 - h2, yc + h2), (x0 + h2, yc + h2)]

        def vseg(xc, y0, y1):
            return [(xc, y0), (xc + h2, y0 + h2), (xc + h2, y1 - h2), (xc, y1),
                    (xc - h2, y1 - h2), (xc - h2, y0 + h2)]

        seg_shapes = {
            "a": hseg(h2 + g, w - h2 - g, h2),
            "g": hseg(h2 + g, w - h2 - g, 0.5),
            "d": hseg(h2 + g, w - h2 - g, 1 - h2),
            "f": vseg(h2, h2 + g, 0.5 - g),
            "b": vseg(w - h2, h2 + g, 0.5 - g),
            "e": vseg(h2, 0.5 + g, 1 - h2 - g),
            "c": vseg(w - h2, 0.5 + g, 1 - h2 - g),
        }

        polys = []
        x = 0.0
        for ch in text:
            if ch in ".,":
                shapes = [[(x + h2 * 0.5, 1 - t), (x + h2 * 0.5 + t, 1 - t),
                           (x + h2 * 0.5 + t, 1.0), (x + h2 * 0.5, 1.0)]]
            elif ch == ":":
                shapes = []
                for yc in (0.3, 0.7):
                    x0 = x + 0.6 * t
                    shapes.append([(x0, yc - h2), (x0 + t, yc - h2), (x0 + t, yc + h2), (x0, yc + h2)])
            else:
                segs = _SEGMENTS.get(ch)
                if segs is None:
                    segs = _SEGMENTS[_ALIASES[ch]]
                shapes = [[(x + px, py) for px, py in seg_shapes[s]] for s in segs]
            for shape in shapes:
                polys.append([(px + self.slant * (1 - py), py) for px, py in shape])
            x += self._advance(ch) + self.spacing * self.aspect
        return polys

    def mask(self, text, size):
        for ch in text:
            if not self.supports(ch):
                raise ValueError(f"face {self.id!r} has no glyph for {ch!r}")
        w, h = self.extent(text, size)
        s = size * SUPERSAMPLE
        canvas = Image.new("L", (w * SUPERSAMPLE, h * SUPERSAMPLE), 0)
        draw = ImageDraw.Draw(canvas)
        for poly in self._polygons(text):
            draw.polygon([(px * s, py * s) for px, py in poly], fill=255)
        big = np.asarray(canvas, dtype=np.float32)
        return cv2.resize(big, (w, h), interpolation=cv2.INTER_AREA).round().astype(np.uint8)


class TrueTypeFace:
    def __init__(self, face_id, path):
        self.id = face_id
        self.path = str(path)
        self._cache = {}

    def __repr__(self):
        return f"TrueTypeFace({self.id!r}, {self.path!r})"

    def _font(self, size):
        font = self._cache.get(size)
        if font is None:
            font = self._cache[size] = ImageFont.truetype(self.path, size)
        return font

    def supports(self, ch):
        return True

    def extent(self, text, size):
        left, top, right, bottom = self._font(size).getbbox(text)
        return right - left, bottom - top

    def mask(self, text, size):
        font = self._font(size)
        left, top, right, bottom = font.getbbox(text)
        canvas = Image.new("L", (max(right - left, 1), max(bottom - top, 1)), 0)
        ImageDraw.Draw(canvas).text((-left, -top), text, font=font, fill=255)
        return np.asarray(canvas, dtype=np.uint8).copy()


def default_segment_faces():
    """The 24 built-in faces: 3 weights x 2 slants x 2 aspects x 2 gaps."""
    faces = {}
    weights = {"light": 0.10, "regular": 0.14, "bold": 0.19}
    slants = {"upright": 0.0, "italic": 0.12}
    aspects = {"narrow": 0.5, "wide": 0.62}
    gaps = {"tight": 0.01, "loose": 0.035}
    for (wn, wt), (sn, sl), (an, asp), (gn, gp) in itertools.product(
        weights.items(), slants.items(), aspects.items(), gaps.items()
    ):
        face_id = f"seg7-{wn}-{sn}-{an}-{gn}"
        faces[face_id] = SegmentFace(face_id, thickness=wt, slant=sl, aspect=asp, gap=gp)
    return faces


def load_font_dir(directory):
    """Every ``*.ttf``/``*.otf`` in ``directory`` keyed by file stem."""
    paths = sorted(p for p in Path(directory).iterdir() if p.suffix.lower() in (".ttf", ".otf"))
    return {p.stem: TrueTypeFace(p.stem, p) for p in paths}


def resolve_font_set(font_dir=None):
    if font_dir is None:
        return default_segment_faces()
    faces = load_font_dir(font_dir)
    if not faces:
        raise UnknownFont(f"no TTF/OTF fonts in {font_dir}")
    return faces
