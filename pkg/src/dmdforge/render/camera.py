"""Pinhole camera: look-at pose, projection and full-visibility test.

Camera space: +x right, +y up, +z along the viewing direction. Pixel
coordinates put the origin at the top-left corner with v growing downward.
The sensor width spans the image width.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ZeroDirection

WORLD_UP = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class CameraPose:
    position: tuple
    look_dir: tuple
    up: tuple
    focal_length: float
    sensor_width: float = 36.0
    image_dims: tuple = (1024, 1024)

    @property
    def right(self):
        return np.cross(np.asarray(self.look_dir), np.asarray(self.up))

    @property
    def focal_px(self):
        return self.focal_length / self.sensor_width * self.image_dims[0]

    def to_json(self):
        return {
            "position": list(self.position),
            "look_dir": list(self.look_dir),
            "up": list(self.up),
            "focal_length": self.focal_length,
            "sensor_width": self.sensor_width,
            "image_dims": list(self.image_dims),
        }

    @classmethod
    def from_json(cls, d):
        return cls(tuple(d["position"]), tuple(d["look_dir"]), tuple(d["up"]),
                   float(d["focal_length"]), float(d["sensor_width"]), tuple(d["image_dims"]))


def _unit(v, what="direction"):
    v = np.asarray(v, dtype=np.float64)
    n = np.linalg.norm(v)
    if not np.isfinite(n) or n == 0.0:
        raise ZeroDirection(f"{what} must be non-zero, got {v.tolist()}")
    return v / n


def compute_camera_pose(object_center, offset_direction, distance, focal, dims, sensor_width=36.0) -> CameraPose:
    """Place the camera ``distance`` along ``offset_direction`` looking back at the center."""
    if distance <= 0:
        raise ValueError(f"distance must be positive, got {distance}")
    offset = _unit(offset_direction, "offset_direction")
    center = np.asarray(object_center, dtype=np.float64)
    position = center + offset * distance
    look = -offset
    up_ref = WORLD_UP if abs(look @ WORLD_UP) < 1.0 - 1e-9 else np.array([0.0, 1.0, 0.0])
    up = up_ref - (up_ref @ look) * look
    up /= np.linalg.norm(up)
    return CameraPose(
        position=tuple(float(c) for c in position),
        look_dir=tuple(float(c) for c in look),
        up=tuple(float(c) for c in up),
        focal_length=float(focal),
        sensor_width=float(sensor_width),
        image_dims=(int(dims[0]), int(dims[1])),
    )


def project_point(pose: CameraPose, point):
    """Pixel (u, v) of a world point, or ``None`` when it is behind the camera."""
    d = np.asarray(point, dtype=np.float64) - np.asarray(pose.position)
    z = d @ np.asarray(pose.look_dir)
    if z <= 0.0:
        return None
    x = d @ pose.right
    y = d @ np.asarray(pose.up)
    f = pose.focal_px
    w, h = pose.image_dims
    return (w / 2.0 + f * x / z, h / 2.0 - f * y / z)


def check_full_visibility(pose: CameraPose, corners) -> bool:
    w, h = pose.image_dims
    for c in corners:
        uv = project_point(pose, c)
        if uv is None:
            return False
        u, v = uv
        if not (0.0 <= u <= w and 0.0 <= v <= h):
            return False
    return True
