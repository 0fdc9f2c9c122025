"""Placement scorers: pick one box on a downscaled background."""
from __future__ import annotations

import tempfile
from pathlib import Path

import numpy as np

from ..errors import AdapterUnavailable
from ..images import write_gray, write_rgb
from .boxes import PlacementBox, clamp_box, mask_aspect_ratio, round_half_away


class PlacementScorer:
    name = "abstract"

    def score_all(self, fg, mask, bg_small, rng) -> PlacementBox:
        """Best box for ``fg`` on ``bg_small``, in ``bg_small`` pixel coordinates."""
        raise NotImplementedError


class RandomScorer(PlacementScorer):
    """Uniform box center; height uniform in ``scale_range`` of the frame height.

    Width follows the mask's aspect ratio, so the box fits the foreground
    before any later correction.
    """

    name = "random"

    def __init__(self, scale_range=(0.25, 0.75)):
        self.scale_range = scale_range

    def score_all(self, fg, mask, bg_small, rng):
        frame_h, frame_w = bg_small.shape[:2]
        ratio = mask_aspect_ratio(mask)
        s = float(rng.uniform(*self.scale_range))
        h = max(1, round_half_away(s * frame_h))
        w = max(1, round_half_away(h * ratio))
        if w > frame_w:
            w = frame_w
            h = max(1, min(frame_h, round_half_away(w / ratio)))
        x = int(rng.integers(0, frame_w - w + 1))
        y = int(rng.integers(0, frame_h - h + 1))
        return PlacementBox(x, y, w, h, source="random")


class FopaScorer(PlacementScorer):
    """Adapter around a pretrained fast object-placement-assessment model.

    ``model`` is any callable ``model(bg_path, fg_path, mask_path, cache_dir,
    heatmap_dir)`` returning ``(boxes, heatmaps)`` with boxes ranked best
    first as ``(x1, y1, x2, y2)``; libcom's ``FOPAHeatMapModel`` has this
    shape. When omitted the libcom model is loaded lazily.
    """

    name = "fopa"

    def __init__(self, model=None, device="cpu"):
        self._model = model
        self.device = device

    def _load(self):
        try:
            from libcom import FOPAHeatMapModel
        except ImportError as exc:
            raise AdapterUnavailable("the fopa scorer needs the libcom package (pip install libcom)") from exc
        self._model = FOPAHeatMapModel(device=self.device)
        return self._model

    def score_all(self, fg, mask, bg_small, rng=None):
        model = self._model or self._load()
        with tempfile.TemporaryDirectory(prefix="fopa-") as tmp:
            tmp = Path(tmp)
            write_rgb(tmp / "bg.png", bg_small)
            write_rgb(tmp / "fg.png", fg)
            write_gray(tmp / "mask.png", np.where(np.asarray(mask) > 0, 255, 0).astype(np.uint8))
            (tmp / "cache").mkdir()
            (tmp / "heatmap").mkdir()
            boxes, _ = model(str(tmp / "bg.png"), str(tmp / "fg.png"), str(tmp / "mask.png"),
                             cache_dir=str(tmp / "cache"), heatmap_dir=str(tmp / "heatmap"))
        if not len(boxes):
            raise AdapterUnavailable("placement model returned no boxes")
        x1, y1, x2, y2 = (int(round(float(v))) for v in boxes[0][:4])
        frame_h, frame_w = bg_small.shape[:2]
        box = PlacementBox(x1, y1, max(1, x2 - x1), max(1, y2 - y1), source="scored")
        return clamp_box(box, frame_w, frame_h)


SCORERS = {"random": RandomScorer, "fopa": FopaScorer}


def make_scorer(name, **kwargs) -> PlacementScorer:
    try:
        return SCORERS[name](**kwargs)
    except KeyError:
        raise AdapterUnavailable(f"unknown scorer {name!r}; choose from {sorted(SCORERS)}") from None
