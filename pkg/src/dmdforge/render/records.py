"""RenderRecord rows: every sampled parameter of one accepted render."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, fields
from pathlib import Path

from .scene import SceneSample

RECORD_COLUMNS = [
    "id", "device", "mode", "display_image", "values", "units", "measurement_types",
    "dist_mult", "rot_axis", "rot_deg", "focal_mm", "light_x", "light_y", "light_z",
    "light_rgb", "light_energy", "falloff", "radius", "body_rgb",
    "blur", "blur_len", "blur_deg", "rgb_path", "depth_path", "mask_path",
]

RECORDS_FILENAME = "render_records.csv"


@dataclass(frozen=True)
class RenderRecord:
    id: str
    device: str
    mode: str
    display_image: str
    values: tuple
    units: tuple
    measurement_types: tuple
    dist_mult: float
    rot_axis: str
    rot_deg: float
    focal_mm: float
    light_x: float
    light_y: float
    light_z: float
    light_rgb: tuple
    light_energy: float
    falloff: float
    radius: float
    body_rgb: tuple
    blur: bool
    blur_len: int
    blur_deg: float
    rgb_path: str
    depth_path: str
    mask_path: str

    def to_sample(self, max_dim: float) -> SceneSample:
        return SceneSample(
            dist_mult=self.dist_mult,
            distance=self.dist_mult * max_dim,
            rot_axis=self.rot_axis,
            rot_deg=self.rot_deg,
            focal_mm=self.focal_mm,
            light_offset=(self.light_x, self.light_y, self.light_z),
            light_rgb=tuple(self.light_rgb),
            light_energy=self.light_energy,
            falloff=self.falloff,
            radius=self.radius,
            body_rgb=tuple(self.body_rgb),
        )

    def to_row(self):
        row = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                row[f.name] = json.dumps(list(v), ensure_ascii=False)
            elif isinstance(v, bool):
                row[f.name] = "1" if v else "0"
            elif isinstance(v, float):
                row[f.name] = repr(v)
            else:
                row[f.name] = str(v)
        return row

    @classmethod
    def from_row(cls, row):
        kwargs = {}
        for f in fields(cls):
            raw = row[f.name]
            if f.type == "tuple":
                kwargs[f.name] = tuple(json.loads(raw))
            elif f.type == "float":
                kwargs[f.name] = float(raw)
            elif f.type == "int":
                kwargs[f.name] = int(raw)
            elif f.type == "bool":
                kwargs[f.name] = raw.strip().lower() in ("1", "true", "yes")
            else:
                kwargs[f.name] = raw
        return cls(**kwargs)


def write_records(records, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=RECORD_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for r in records:
            writer.writerow(r.to_row())


def read_records(path) -> list:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return [RenderRecord.from_row(row) for row in csv.DictReader(fh)]
