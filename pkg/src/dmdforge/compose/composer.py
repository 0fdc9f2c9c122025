"""Copy-paste composition of rendered devices onto background photos."""
from __future__ import annotations

import csv
import logging
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from functools import lru_cache
from pathlib import Path

import cv2
import numpy as np

from ..errors import AdapterUnavailable, BoxOutOfFrame, NoBackgrounds, RetriesExhausted
from ..images import image_size, read_gray, read_rgb, write_rgb
from .boxes import (
    MIN_AREA_FRACTION,
    PlacementBox,
    correct_aspect_ratio,
    downscale_background,
    enforce_min_area,
    mask_bbox,
    rescale_box,
)
from .scorers import PlacementScorer

log = logging.getLogger(__name__)

IMAGE_SUFFIXES = (".jpg", ".jpeg", ".png", ".bmp", ".webp")
MANIFEST_COLUMNS = ["composite", "foreground", "mask", "background", "x", "y", "w", "h",
                    "source", "corrected", "clamped"]
MANIFEST_FILENAME = "manifest.csv"
DEDUP_RETRIES = 20
MAX_PAIR_RESAMPLES = 50


def curate_backgrounds(directory, min_w=600, min_h=800) -> list:
    """Images larger than ``min_w`` x ``min_h`` in either orientation, sorted by name."""
    directory = Path(directory)
    paths = sorted(p for p in directory.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES) if directory.is_dir() else []
    kept = []
    for p in paths:
        try:
            w, h = image_size(p)
        except OSError:
            log.warning("unreadable background %s", p)
            continue
        if (w > min_w and h > min_h) or (w > min_h and h > min_w):
            kept.append(p)
    if not kept:
        raise NoBackgrounds(f"no background in {directory} exceeds {min_w}x{min_h}")
    return kept


class TripletRegistry:
    """Dataset-scoped set of (foreground, background, box) identities."""

    def __init__(self):
        self._seen = set()
        self._lock = threading.Lock()

    def __len__(self):
        return len(self._seen)

    def check_and_add(self, fg_id, bg_id, box: PlacementBox) -> bool:
        """True when the triplet was already recorded; otherwise record it."""
        key = (str(fg_id), str(bg_id), box.key)
        with self._lock:
            if key in self._seen:
                return True
            self._seen.add(key)
            return False


def dedup_check(registry: TripletRegistry, fg_id, bg_id, box) -> bool:
    return registry.check_and_add(fg_id, bg_id, box)


def composite(fg, mask, bg, box: PlacementBox) -> np.ndarray:
    """Paste ``fg`` into ``box`` wherever the resized mask is foreground."""
    frame_h, frame_w = bg.shape[:2]
    if not box.inside(frame_w, frame_h):
        raise BoxOutOfFrame(f"{box} outside {frame_w}x{frame_h} background")
    if fg.shape[:2] != np.asarray(mask).shape[:2]:
        raise ValueError("foreground and mask dimensions differ")
    size = (box.width, box.height)
    fg_r = cv2.resize(fg, size, interpolation=cv2.INTER_LINEAR)
    mask_r = cv2.resize(np.asarray(mask, dtype=np.uint8), size, interpolation=cv2.INTER_NEAREST) > 0
    out = bg.copy()
    region = out[box.y:box.y + box.height, box.x:box.x + box.width]
    region[mask_r] = fg_r[mask_r]
    return out


def harmonize(image, mask, enabled=False, adapter=None):
    """Optional harmonization hook; the disabled path is the identity."""
    if not enabled:
        return image
    if adapter is None:
        raise AdapterUnavailable("harmonization enabled but no adapter configured")
    return adapter(image, mask)


@dataclass(frozen=True)
class ForegroundItem:
    id: str
    rgb_path: Path
    mask_path: Path


def load_foregrounds(render_dir) -> list:
    """Pair ``rgb/*.png`` with ``mask/*.png`` in a render output directory."""
    render_dir = Path(render_dir)
    items = []
    for rgb in sorted((render_dir / "rgb").glob("*.png")):
        mask = render_dir / "mask" / rgb.name
        if mask.exists():
            items.append(ForegroundItem(rgb.stem, rgb, mask))
    if not items:
        raise FileNotFoundError(f"no rgb/mask pairs under {render_dir}")
    return items


@lru_cache(maxsize=256)
def _cropped_foreground(rgb_path, mask_path):
    fg = read_rgb(rgb_path)
    mask = read_gray(mask_path)
    x, y, w, h = mask_bbox(mask)
    return fg[y:y + h, x:x + w].copy(), mask[y:y + h, x:x + w].copy()


@lru_cache(maxsize=32)
def _background(path):
    bg = read_rgb(path)
    small, scale = downscale_background(bg)
    return bg, small, scale


@dataclass(frozen=True)
class CompositeRecord:
    composite_path: str
    fg_path: str
    mask_path: str
    bg_path: str
    box: PlacementBox
    fg_record_id: str

    def to_row(self):
        b = self.box
        return {
            "composite": self.composite_path, "foreground": self.fg_path, "mask": self.mask_path,
            "background": self.bg_path, "x": b.x, "y": b.y, "w": b.width, "h": b.height,
            "source": b.source, "corrected": int(b.corrected), "clamped": int(b.clamped),
        }


def _rel(path, base):
    return Path(os.path.relpath(Path(path).resolve(), Path(base).resolve())).as_posix()


def plan_box(fg_mask, bg_dims, bg_small, scale, scorer, rng, fg=None, min_fraction=MIN_AREA_FRACTION):
    """Score, rescale, aspect-correct and size-check one placement."""
    box = scorer.score_all(fg, fg_mask, bg_small, rng)
    box = rescale_box(box, scale, bg_dims)
    box = replace(correct_aspect_ratio(box, fg_mask), clamped=False)
    return enforce_min_area(box, bg_dims, min_fraction)


class DatasetComposer:
    def __init__(self, foregrounds, backgrounds, scorer: PlacementScorer, out_dir,
                 min_fraction=MIN_AREA_FRACTION, harmonize=False, harmonizer=None,
                 max_retries=DEDUP_RETRIES, image_ext=".png"):
        if not foregrounds:
            raise ValueError("no foregrounds to compose")
        if not backgrounds:
            raise NoBackgrounds("no backgrounds to compose onto")
        if harmonize and harmonizer is None:
            raise AdapterUnavailable("harmonization enabled but no adapter configured")
        self.foregrounds = list(foregrounds)
        self.backgrounds = [Path(b) for b in backgrounds]
        self.scorer = scorer
        self.out_dir = Path(out_dir)
        self.min_fraction = min_fraction
        self.harmonize = harmonize
        self.harmonizer = harmonizer
        self.max_retries = max_retries
        self.image_ext = image_ext
        self.registry = TripletRegistry()

    def compose_one(self, index: int, seed: int) -> CompositeRecord:
        rng = np.random.default_rng([seed, index])
        for _ in range(MAX_PAIR_RESAMPLES):
            fg_item = self.foregrounds[int(rng.integers(len(self.foregrounds)))]
            bg_path = self.backgrounds[int(rng.integers(len(self.backgrounds)))]
            fg, mask = _cropped_foreground(str(fg_item.rgb_path), str(fg_item.mask_path))
            bg, small, scale = _background(str(bg_path))
            dims = (bg.shape[1], bg.shape[0])
            for _ in range(self.max_retries):
                box = plan_box(mask, dims, small, scale, self.scorer, rng, fg=fg, min_fraction=self.min_fraction)
                if not dedup_check(self.registry, fg_item.id, bg_path.name, box):
                    return self._emit(index, fg_item, bg_path, fg, mask, bg, box)
            log.info("composite %d: %d duplicate placements for %s on %s; resampling pair",
                     index, self.max_retries, fg_item.id, bg_path.name)
        raise RetriesExhausted(f"composite {index}: no unique placement after {MAX_PAIR_RESAMPLES} pairs")

    def _emit(self, index, fg_item, bg_path, fg, mask, bg, box):
        image = composite(fg, mask, bg, box)
        if self.harmonize:
            full_mask = np.zeros(bg.shape[:2], dtype=np.uint8)
            full_mask[box.y:box.y + box.height, box.x:box.x + box.width] = cv2.resize(
                mask, (box.width, box.height), interpolation=cv2.INTER_NEAREST)
            image = harmonize(image, full_mask, True, self.harmonizer)
        out_path = self.out_dir / "composites" / f"{index:06d}{self.image_ext}"
        write_rgb(out_path, image)
        return CompositeRecord(
            composite_path=_rel(out_path, self.out_dir),
            fg_path=_rel(fg_item.rgb_path, self.out_dir),
            mask_path=_rel(fg_item.mask_path, self.out_dir),
            bg_path=_rel(bg_path, self.out_dir),
            box=box,
            fg_record_id=fg_item.id,
        )

    def run(self, n: int, seed: int, workers: int = 1) -> list:
        if n < 1:
            raise ValueError("n must be at least 1")
        start = time.perf_counter()
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                records = list(pool.map(lambda i: self.compose_one(i, seed), range(n)))
        else:
            records = [self.compose_one(i, seed) for i in range(n)]
        write_manifest(records, self.out_dir / MANIFEST_FILENAME)
        elapsed = time.perf_counter() - start
        log.info("composed %d images in %.1f s (%.3f s/image)", n, elapsed, elapsed / n)
        return records


def generate_dataset(foregrounds, backgrounds, n, scorer, out_dir, seed=0, workers=1, **kwargs) -> list:
    return DatasetComposer(foregrounds, backgrounds, scorer, out_dir, **kwargs).run(n, seed, workers)


def write_manifest(records, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=MANIFEST_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for r in records:
            writer.writerow(r.to_row())


def read_manifest(path) -> list:
    """Manifest rows as dicts with integer box fields."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        for k in ("x", "y", "w", "h"):
            row[k] = int(row[k])
        for k in ("corrected", "clamped"):
            row[k] = row[k] in ("1", "true", "True")
    return rows
