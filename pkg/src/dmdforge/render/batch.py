"""Batch rendering: sample, render, blur, mask, and log one CSV row per render."""
from __future__ import annotations

import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..display import read_display_index
from ..errors import DmdForgeError, VisibilityExhausted
from ..images import write_depth, write_gray, write_rgb
from .backends import MockBackend, RenderBackend
from .directives import build_scene_directives, dump_directives
from .post import apply_motion_blur, depth_to_mask, make_motion_kernel
from .records import RECORDS_FILENAME, RenderRecord, write_records
from .scene import DEFAULT_PALETTE, DeviceModel, RenderRanges, resample_until_visible

log = logging.getLogger(__name__)

MAX_SKIP_FACTOR = 10


@dataclass(frozen=True)
class DisplayEntry:
    id: str
    device: str
    mode: str
    path: Path
    values: tuple
    units: tuple
    measurement_types: tuple


def load_display_entries(display_dir) -> list:
    display_dir = Path(display_dir)
    return [
        DisplayEntry(
            id=row["id"],
            device=row["device"],
            mode=row["mode"],
            path=display_dir / row["path"],
            values=tuple(json.loads(row["values"])),
            units=tuple(json.loads(row["units"])),
            measurement_types=tuple(json.loads(row["measurement_types"])),
        )
        for row in read_display_index(display_dir)
    ]


def filter_devices(devices, exclude=()):
    banned = {e.strip().casefold() for e in exclude}
    kept = [d for d in devices if d.name.casefold() not in banned]
    for d in devices:
        if d.name.casefold() in banned:
            log.info("excluding device %s", d.name)
    return kept


def _posix_rel(path, base):
    return Path(os.path.relpath(Path(path).resolve(), Path(base).resolve())).as_posix()


@dataclass
class _Item:
    index: int
    record: RenderRecord | None
    error: str = ""


class BatchRenderer:
    def __init__(self, devices, displays, ranges: RenderRanges, out_dir, backend: RenderBackend = None,
                 base_dir=None, palette=DEFAULT_PALETTE, max_attempts=100, exclude=()):
        self.devices = filter_devices(devices, exclude)
        self.ranges = ranges
        self.out_dir = Path(out_dir)
        self.base_dir = Path(base_dir) if base_dir is not None else self.out_dir
        self.backend = backend or MockBackend()
        self.palette = palette
        self.max_attempts = max_attempts

        self.pool = []
        for dev in self.devices:
            matching = [d for d in displays if not d.device or d.device.casefold() == dev.name.casefold()]
            if not matching:
                log.warning("device %s has no display images; skipping it", dev.name)
                continue
            self.pool.append((dev, matching))
        if not self.pool:
            raise DmdForgeError("no renderable device: every device lacks displays or was excluded")

    def render_one(self, index: int, seed: int) -> _Item:
        rng = np.random.default_rng([seed, index])
        device, displays = self.pool[int(rng.integers(len(self.pool)))]
        display = displays[int(rng.integers(len(displays)))]
        try:
            scene = resample_until_visible(self.ranges, device, rng, self.max_attempts, self.palette)
        except VisibilityExhausted as exc:
            log.warning("render %d skipped: %s", index, exc)
            return _Item(index, None, str(exc))

        record_id = f"r{index:06d}"
        texture = _posix_rel(display.path, self.base_dir)
        directives = build_scene_directives(scene.sample, device, texture, self.ranges, render_id=record_id)
        out = self.backend.render(directives, self.base_dir)

        rgb = out.rgb
        blur = bool(rng.random() < self.ranges.blur_probability)
        blur_len, blur_deg = 0, 0.0
        if blur:
            lo, hi = self.ranges.blur_length
            blur_len = int(rng.integers(int(lo), int(hi) + 1))
            blur_deg = float(rng.uniform(0.0, 180.0))
            rgb = apply_motion_blur(rgb, make_motion_kernel(blur_len, math.radians(blur_deg)))
        mask = depth_to_mask(out.depth)

        paths = {k: self.out_dir / k / f"{record_id}.png" for k in ("rgb", "depth", "mask")}
        write_rgb(paths["rgb"], rgb)
        write_depth(paths["depth"], out.depth)
        write_gray(paths["mask"], mask)
        for name, raster in out.extra.items():
            write_rgb(self.out_dir / name / f"{record_id}.png", raster)
        directive_path = self.out_dir / "directives" / f"{record_id}.json"
        directive_path.parent.mkdir(parents=True, exist_ok=True)
        directive_path.write_text(dump_directives(directives), encoding="utf-8")

        s = scene.sample
        record = RenderRecord(
            id=record_id,
            device=device.name,
            mode=display.mode,
            display_image=display.id,
            values=display.values,
            units=display.units,
            measurement_types=display.measurement_types,
            dist_mult=s.dist_mult,
            rot_axis=s.rot_axis,
            rot_deg=s.rot_deg,
            focal_mm=s.focal_mm,
            light_x=s.light_offset[0],
            light_y=s.light_offset[1],
            light_z=s.light_offset[2],
            light_rgb=s.light_rgb,
            light_energy=s.light_energy,
            falloff=s.falloff,
            radius=s.radius,
            body_rgb=s.body_rgb,
            blur=blur,
            blur_len=blur_len,
            blur_deg=blur_deg,
            rgb_path=f"rgb/{record_id}.png",
            depth_path=f"depth/{record_id}.png",
            mask_path=f"mask/{record_id}.png",
        )
        return _Item(index, record)

    def run(self, count: int, seed: int, workers: int = 1) -> list:
        """Render until ``count`` renders are accepted; items failing visibility are skipped."""
        records = []
        next_index = 0
        limit = MAX_SKIP_FACTOR * count + MAX_SKIP_FACTOR
        executor = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
        try:
            while len(records) < count:
                need = count - len(records)
                indices = range(next_index, next_index + need)
                next_index += need
                if next_index > limit:
                    raise VisibilityExhausted(
                        f"only {len(records)} of {count} renders accepted after {limit} items"
                    )
                if executor is None:
                    items = [self.render_one(i, seed) for i in indices]
                else:
                    items = list(executor.map(lambda i: self.render_one(i, seed), indices))
                records.extend(it.record for it in items if it.record is not None)
        finally:
            if executor is not None:
                executor.shutdown()
        write_records(records, self.out_dir / RECORDS_FILENAME)
        return records


def render_batch(devices, displays, ranges, count, seed, out_dir, backend=None, workers=1, **kwargs) -> list:
    return BatchRenderer(devices, displays, ranges, out_dir, backend=backend, **kwargs).run(count, seed, workers)
